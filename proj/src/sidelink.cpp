#include "slsense/sidelink.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace slsense {

void ChirpConfig::validate() const {
  if (bandwidth_ghz <= 0.0) throw ConfigError("chirp: bandwidth must be > 0");
  if (slope_mhz_per_us <= 0.0) throw ConfigError("chirp: slope must be > 0");
  if (start_ghz <= 0.0) throw ConfigError("chirp: start frequency must be > 0");
}

double glitch_duration_us(double bandwidth_mhz, double slope_aggressor_mhz_us,
                          double slope_victim_mhz_us) {
  if (slope_aggressor_mhz_us == slope_victim_mhz_us)
    throw DataError("glitch_duration: equal slopes are the parallel regime, not crossing");
  return bandwidth_mhz / std::abs(slope_aggressor_mhz_us - slope_victim_mhz_us);
}

const char* session_state_name(SessionState s) {
  switch (s) {
    case SessionState::Idle: return "Idle";
    case SessionState::ResourceRequested: return "ResourceRequested";
    case SessionState::Granted: return "Granted";
    case SessionState::PeerChannelOpen: return "PeerChannelOpen";
    case SessionState::Sensing: return "Sensing";
    case SessionState::Aggregating: return "Aggregating";
    case SessionState::Releasing: return "Releasing";
    case SessionState::Closed: return "Closed";
  }
  return "?";
}

const char* message_kind_name(MessageKind m) {
  switch (m) {
    case MessageKind::RequestResources: return "RequestResources";
    case MessageKind::GrantResources: return "GrantResources";
    case MessageKind::EstablishPeerChannel: return "EstablishPeerChannel";
    case MessageKind::StartSensing: return "StartSensing";
    case MessageKind::CompleteSensing: return "CompleteSensing";
    case MessageKind::ReleaseResources: return "ReleaseResources";
    case MessageKind::ConfirmRelease: return "ConfirmRelease";
  }
  return "?";
}

namespace {

[[noreturn]] void illegal(const SidelinkSession& s, const SessionMessage& msg) {
  throw ProtocolError("session " + std::to_string(s.id) + ": message " +
                      message_kind_name(msg.kind) + " is illegal in state " +
                      session_state_name(s.state));
}

}  // namespace

SidelinkSession step_session(const SidelinkSession& session, const SessionMessage& msg) {
  SidelinkSession next = session;
  switch (session.state) {
    case SessionState::Idle:
      if (msg.kind != MessageKind::RequestResources) illegal(session, msg);
      next.state = SessionState::ResourceRequested;
      return next;
    case SessionState::ResourceRequested:
      if (msg.kind != MessageKind::GrantResources) illegal(session, msg);
      if (msg.block < 0) throw ProtocolError("grant without a resource block");
      next.resource_block = msg.block;
      next.state = SessionState::Granted;
      return next;
    case SessionState::Granted:
      if (msg.kind == MessageKind::EstablishPeerChannel) {
        if (!session.multi_ue())
          throw ProtocolError("session " + std::to_string(session.id) +
                              ": peer channel requires peer UEs");
        next.state = SessionState::PeerChannelOpen;
        return next;
      }
      if (msg.kind == MessageKind::StartSensing) {
        if (session.multi_ue())
          throw ProtocolError("session " + std::to_string(session.id) +
                              ": multi-UE session must open the peer channel first");
        next.state = SessionState::Sensing;
        return next;
      }
      illegal(session, msg);
    case SessionState::PeerChannelOpen:
      if (msg.kind != MessageKind::StartSensing) illegal(session, msg);
      next.state = SessionState::Sensing;
      return next;
    case SessionState::Sensing:
      if (msg.kind != MessageKind::CompleteSensing) illegal(session, msg);
      next.state = SessionState::Aggregating;
      return next;
    case SessionState::Aggregating:
      if (msg.kind != MessageKind::ReleaseResources) illegal(session, msg);
      next.state = SessionState::Releasing;
      return next;
    case SessionState::Releasing:
      if (msg.kind != MessageKind::ConfirmRelease) illegal(session, msg);
      next.state = SessionState::Closed;
      next.resource_block = -1;
      return next;
    case SessionState::Closed:
      illegal(session, msg);
  }
  illegal(session, msg);
}

std::optional<InterferenceEvent> classify_interference(const ChirpConfig& aggressor,
                                                       const ChirpConfig& victim) {
  const double a0 = aggressor.start_ghz, a1 = aggressor.start_ghz + aggressor.bandwidth_ghz;
  const double v0 = victim.start_ghz, v1 = victim.start_ghz + victim.bandwidth_ghz;
  if (a0 >= v1 || v0 >= a1) return std::nullopt;  // disjoint bands

  InterferenceEvent ev;
  if (aggressor.slope_mhz_per_us == victim.slope_mhz_per_us) {
    if (std::abs(aggressor.start_offset_us - victim.start_offset_us) < 1.0) {
      ev.kind = InterferenceKind::Parallel;
      return ev;
    }
    return std::nullopt;
  }
  ev.kind = InterferenceKind::Crossing;
  ev.glitch_us = glitch_duration_us(victim.bandwidth_mhz(), aggressor.slope_mhz_per_us,
                                    victim.slope_mhz_per_us);
  return ev;
}

MotionPointCloud apply_interference(const MotionPointCloud& cloud,
                                    const std::vector<InterferenceEvent>& events, Rng& rng,
                                    const InterferenceSection& params,
                                    double chirp_duration_us) {
  MotionPointCloud out = cloud;
  for (const InterferenceEvent& ev : events) {
    if (ev.kind == InterferenceKind::Crossing) {
      const double p_drop =
          std::clamp(std::min(1.0, ev.glitch_us / chirp_duration_us) * params.drop_scale, 0.0, 1.0);
      std::vector<Point> kept;
      kept.reserve(out.points.size());
      for (const Point& p : out.points) {
        if (rng.uniform() < p_drop) continue;
        kept.push_back(p);
      }
      out.points = std::move(kept);
    } else {
      const int ghosts = ev.ghost_count > 0 ? ev.ghost_count : params.ghost_count;
      const double r = params.range_extent_m;
      for (int i = 0; i < ghosts; ++i) {
        Point p;
        p.x = rng.uniform(-r, r);
        p.y = rng.uniform(-r, r);
        p.z = rng.uniform(0.0, r);
        p.frame = rng.below_int(std::max(1, out.frame_count));
        out.points.push_back(p);
      }
    }
  }
  return out;
}

// ---- scenario IO ----

namespace {

json chirp_to_json(const ChirpConfig& c) {
  return {{"start_ghz", c.start_ghz},
          {"bandwidth_ghz", c.bandwidth_ghz},
          {"slope_mhz_per_us", c.slope_mhz_per_us},
          {"start_offset_us", c.start_offset_us},
          {"frame_period_ms", c.frame_period_ms}};
}

ChirpConfig chirp_from_json(const json& j) {
  ChirpConfig c;
  if (j.contains("start_ghz")) c.start_ghz = j.at("start_ghz").get<double>();
  if (j.contains("bandwidth_ghz")) c.bandwidth_ghz = j.at("bandwidth_ghz").get<double>();
  if (j.contains("slope_mhz_per_us")) c.slope_mhz_per_us = j.at("slope_mhz_per_us").get<double>();
  if (j.contains("start_offset_us")) c.start_offset_us = j.at("start_offset_us").get<double>();
  if (j.contains("frame_period_ms")) c.frame_period_ms = j.at("frame_period_ms").get<double>();
  c.validate();
  return c;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("scenario parse error in " + path + ": " + e.what());
  }
  Scenario s;
  try {
    if (j.contains("blocks")) s.blocks = j.at("blocks").get<int>();
    if (j.contains("msg_latency_us")) s.msg_latency_us = j.at("msg_latency_us").get<std::int64_t>();
    for (const json& u : j.at("ues")) {
      UeSpec ue;
      ue.id = u.at("id").get<int>();
      if (u.contains("chirp")) ue.chirp = chirp_from_json(u.at("chirp"));
      s.ues.push_back(ue);
    }
    for (const json& e : j.at("sessions")) {
      SessionSpec sp;
      sp.id = e.at("id").get<int>();
      sp.initiator_ue = e.at("initiator").get<int>();
      if (e.contains("peers")) sp.peer_ues = e.at("peers").get<std::vector<int>>();
      sp.request_time_us = e.at("request_time_us").get<std::int64_t>();
      if (e.contains("sensing_duration_us"))
        sp.sensing_duration_us = e.at("sensing_duration_us").get<std::int64_t>();
      if (e.contains("samples")) sp.samples = e.at("samples").get<int>();
      if (e.contains("forced_spectrum_block"))
        sp.forced_spectrum_block = e.at("forced_spectrum_block").get<int>();
      s.sessions.push_back(std::move(sp));
    }
  } catch (const json::exception& e) {
    throw DataError("scenario field error in " + path + ": " + e.what());
  }
  if (s.blocks < 1) throw ConfigError("scenario: blocks must be >= 1");
  return s;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  json j;
  j["blocks"] = scenario.blocks;
  j["msg_latency_us"] = scenario.msg_latency_us;
  j["ues"] = json::array();
  for (const UeSpec& u : scenario.ues)
    j["ues"].push_back({{"id", u.id}, {"chirp", chirp_to_json(u.chirp)}});
  j["sessions"] = json::array();
  for (const SessionSpec& s : scenario.sessions) {
    j["sessions"].push_back({{"id", s.id},
                             {"initiator", s.initiator_ue},
                             {"peers", s.peer_ues},
                             {"request_time_us", s.request_time_us},
                             {"sensing_duration_us", s.sensing_duration_us},
                             {"samples", s.samples},
                             {"forced_spectrum_block", s.forced_spectrum_block}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

Scenario make_random_scenario(std::uint64_t seed, const SimSection& cfg) {
  Rng rng(mix_seed(seed, 0x51deULL));
  Scenario s;
  s.blocks = cfg.blocks;
  const double slopes[] = {10.0, 20.0, 30.0, 40.0};
  for (int u = 0; u < cfg.random_ues; ++u) {
    UeSpec ue;
    ue.id = u;
    ue.chirp.slope_mhz_per_us = slopes[rng.below_int(4)];
    ue.chirp.start_offset_us = rng.uniform(0.0, 4.0);
    s.ues.push_back(ue);
  }
  for (int i = 0; i < cfg.random_sessions; ++i) {
    SessionSpec sp;
    sp.id = i;
    sp.initiator_ue = rng.below_int(cfg.random_ues);
    if (rng.uniform() < cfg.multi_ue_fraction) {
      const int n_peers = 1 + rng.below_int(3);
      for (int p = 0; p < n_peers; ++p) {
        const int peer = rng.below_int(cfg.random_ues);
        if (peer != sp.initiator_ue &&
            std::find(sp.peer_ues.begin(), sp.peer_ues.end(), peer) == sp.peer_ues.end())
          sp.peer_ues.push_back(peer);
      }
    }
    sp.request_time_us = static_cast<std::int64_t>(rng.below(
        static_cast<std::uint64_t>(std::max<std::int64_t>(1, cfg.horizon_us))));
    sp.sensing_duration_us = 2000 + static_cast<std::int64_t>(rng.below(20000));
    sp.samples = 1 + rng.below_int(3);
    if (rng.uniform() < cfg.overlap_fraction)
      sp.forced_spectrum_block = rng.below_int(cfg.blocks);
    s.sessions.push_back(std::move(sp));
  }
  std::sort(s.sessions.begin(), s.sessions.end(),
            [](const SessionSpec& a, const SessionSpec& b) {
              return a.request_time_us < b.request_time_us ||
                     (a.request_time_us == b.request_time_us && a.id < b.id);
            });
  return s;
}

// ---- event loop ----

namespace {

struct SimEvent {
  std::int64_t time_us;
  std::uint64_t seq;
  int session_id;          // -1: gNB processing
  SessionMessage msg;      // session delivery
  bool gnb_request = false;
  bool gnb_release = false;

  bool operator>(const SimEvent& other) const {
    return time_us > other.time_us || (time_us == other.time_us && seq > other.seq);
  }
};

}  // namespace

std::string SimResult::trace_text() const {
  std::ostringstream os;
  for (const TraceEvent& e : trace)
    os << e.time_us << ',' << e.entity << ',' << e.event << ',' << e.detail << '\n';
  return os.str();
}

SimResult run_simulation(const Scenario& scenario) {
  SimResult result;
  std::map<int, ChirpConfig> ue_chirp;
  for (const UeSpec& u : scenario.ues) ue_chirp[u.id] = u.chirp;

  std::map<int, SidelinkSession> sessions;
  std::map<int, const SessionSpec*> specs;
  for (const SessionSpec& sp : scenario.sessions) {
    if (sessions.count(sp.id))
      throw ConfigError("scenario: duplicate session id " + std::to_string(sp.id));
    if (!ue_chirp.count(sp.initiator_ue))
      throw ConfigError("scenario: session " + std::to_string(sp.id) + " references unknown UE " +
                        std::to_string(sp.initiator_ue));
    SidelinkSession s;
    s.id = sp.id;
    s.ue_id = sp.initiator_ue;
    s.peer_ues = sp.peer_ues;
    s.chirp = ue_chirp.at(sp.initiator_ue);
    s.forced_spectrum_block = sp.forced_spectrum_block;
    s.samples = sp.samples;
    sessions.emplace(sp.id, std::move(s));
    specs.emplace(sp.id, &sp);
  }

  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<SimEvent>> queue;
  std::uint64_t seq = 0;
  auto schedule = [&](std::int64_t t, SimEvent ev) {
    ev.time_us = t;
    ev.seq = seq++;
    queue.push(std::move(ev));
  };

  const std::int64_t latency = scenario.msg_latency_us;
  std::vector<int> free_blocks;
  for (int b = scenario.blocks - 1; b >= 0; --b) free_blocks.push_back(b);  // pop lowest first
  std::deque<int> pending;  // FIFO of sessions waiting for a block
  const int total_blocks = scenario.blocks;
  int held_blocks = 0;

  auto trace = [&](std::int64_t t, std::string entity, std::string event, std::string detail) {
    result.trace.push_back({t, std::move(entity), std::move(event), std::move(detail)});
  };

  auto audit_pool = [&](std::int64_t t) {
    if (held_blocks + static_cast<int>(free_blocks.size()) != total_blocks)
      throw RuntimeError("resource conservation violated at t=" + std::to_string(t));
  };

  auto transition = [&](std::int64_t t, SidelinkSession& s, const SessionMessage& msg) {
    const SessionState before = s.state;
    s = step_session(s, msg);
    trace(t, "session:" + std::to_string(s.id), "transition",
          std::string(session_state_name(before)) + "->" + session_state_name(s.state) + " on " +
              message_kind_name(msg.kind));
  };

  auto grant_next = [&](std::int64_t t) {
    while (!pending.empty() && !free_blocks.empty()) {
      const int sid = pending.front();
      pending.pop_front();
      const int block = free_blocks.back();
      free_blocks.pop_back();
      ++held_blocks;
      trace(t, "gnb", "grant", "session=" + std::to_string(sid) +
                                   " block=" + std::to_string(block));
      audit_pool(t);
      SimEvent ev;
      ev.session_id = sid;
      ev.msg = {MessageKind::GrantResources, block};
      schedule(t + latency, ev);
    }
  };

  // Seed requests.
  for (const SessionSpec& sp : scenario.sessions) {
    SimEvent ev;
    ev.session_id = sp.id;
    ev.msg = {MessageKind::RequestResources, -1};
    schedule(sp.request_time_us, ev);
  }

  // Sessions currently sensing, for interference pairing.
  std::vector<int> sensing_now;

  while (!queue.empty()) {
    const SimEvent ev = queue.top();
    queue.pop();
    const std::int64_t t = ev.time_us;

    if (ev.gnb_request) {
      pending.push_back(ev.session_id);
      trace(t, "gnb", "request", "session=" + std::to_string(ev.session_id));
      grant_next(t);
      continue;
    }
    if (ev.gnb_release) {
      SidelinkSession& s = sessions.at(ev.session_id);
      const int block = s.resource_block;
      free_blocks.push_back(block);
      --held_blocks;
      std::sort(free_blocks.begin(), free_blocks.end(), std::greater<int>());
      trace(t, "gnb", "release",
            "session=" + std::to_string(ev.session_id) + " block=" + std::to_string(block));
      audit_pool(t);
      SimEvent confirm;
      confirm.session_id = ev.session_id;
      confirm.msg = {MessageKind::ConfirmRelease, -1};
      schedule(t + latency, confirm);
      grant_next(t);
      continue;
    }

    SidelinkSession& s = sessions.at(ev.session_id);
    switch (ev.msg.kind) {
      case MessageKind::RequestResources: {
        transition(t, s, ev.msg);
        SimEvent req;
        req.session_id = s.id;
        req.gnb_request = true;
        schedule(t + latency, req);
        break;
      }
      case MessageKind::GrantResources: {
        transition(t, s, ev.msg);
        SimEvent next;
        next.session_id = s.id;
        next.msg = {s.multi_ue() ? MessageKind::EstablishPeerChannel : MessageKind::StartSensing,
                    -1};
        schedule(t + latency, next);
        break;
      }
      case MessageKind::EstablishPeerChannel: {
        transition(t, s, ev.msg);
        trace(t, "session:" + std::to_string(s.id), "allocation_shared",
              "peers=" + std::to_string(s.peer_ues.size()) +
                  " block=" + std::to_string(s.resource_block));
        SimEvent next;
        next.session_id = s.id;
        next.msg = {MessageKind::StartSensing, -1};
        schedule(t + latency, next);
        break;
      }
      case MessageKind::StartSensing: {
        transition(t, s, ev.msg);
        // Interference against every session already sensing on the same
        // spectrum; the newcomer is the aggressor.
        for (int other_id : sensing_now) {
          const SidelinkSession& other = sessions.at(other_id);
          if (other.spectrum_block() != s.spectrum_block()) continue;
          auto classified = classify_interference(s.chirp, other.chirp);
          if (!classified) continue;
          InterferenceEvent ie = *classified;
          ie.aggressor_session = s.id;
          ie.victim_session = other_id;
          result.interference.push_back(ie);
          if (ie.kind == InterferenceKind::Crossing) {
            trace(t, "interference", "crossing",
                  "aggressor=" + std::to_string(s.id) + " victim=" + std::to_string(other_id) +
                      " block=" + std::to_string(s.spectrum_block()) +
                      " glitch_us=" + format_g9(ie.glitch_us));
          } else {
            trace(t, "interference", "parallel",
                  "aggressor=" + std::to_string(s.id) + " victim=" + std::to_string(other_id) +
                      " block=" + std::to_string(s.spectrum_block()));
          }
        }
        sensing_now.push_back(s.id);
        SimEvent done;
        done.session_id = s.id;
        done.msg = {MessageKind::CompleteSensing, -1};
        schedule(t + specs.at(s.id)->sensing_duration_us, done);
        break;
      }
      case MessageKind::CompleteSensing: {
        transition(t, s, ev.msg);
        sensing_now.erase(std::remove(sensing_now.begin(), sensing_now.end(), s.id),
                          sensing_now.end());
        // One representation vector per peer per sensed sample reaches
        // the initiator.
        const int vectors = static_cast<int>(s.peer_ues.size()) * s.samples;
        trace(t, "session:" + std::to_string(s.id), "aggregate",
              "peer_vectors=" + std::to_string(vectors) + " samples=" + std::to_string(s.samples) +
                  " peers=" + std::to_string(s.peer_ues.size()));
        SimEvent rel;
        rel.session_id = s.id;
        rel.msg = {MessageKind::ReleaseResources, -1};
        schedule(t + latency, rel);
        break;
      }
      case MessageKind::ReleaseResources: {
        transition(t, s, ev.msg);
        SimEvent rel;
        rel.session_id = s.id;
        rel.gnb_release = true;
        schedule(t + latency, rel);
        break;
      }
      case MessageKind::ConfirmRelease: {
        transition(t, s, ev.msg);
        ++result.sessions_completed;
        break;
      }
    }
  }

  result.grants_queued = static_cast<int>(pending.size());
  return result;
}

void write_trace_csv(const SimResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "time_us,entity,event,detail\n";
  out << result.trace_text();
}

}  // namespace slsense
