#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slsense/common.hpp"
#include "slsense/config.hpp"
#include "slsense/geometry.hpp"

namespace slsense {

// Illegal protocol transition; names the state and the message.
class ProtocolError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

struct ChirpConfig {
  double start_ghz = 77.0;
  double bandwidth_ghz = 4.0;
  double slope_mhz_per_us = 30.0;
  double start_offset_us = 0.0;
  double frame_period_ms = 33.0;

  double bandwidth_mhz() const { return bandwidth_ghz * 1000.0; }
  void validate() const;
};

// Eq.-style glitch length for two crossing chirps: bandwidth over the
// absolute slope difference (MHz and MHz/us give microseconds). Equal
// slopes are the parallel regime and rejected here.
double glitch_duration_us(double bandwidth_mhz, double slope_aggressor_mhz_us,
                          double slope_victim_mhz_us);

enum class SessionState {
  Idle,
  ResourceRequested,
  Granted,
  PeerChannelOpen,
  Sensing,
  Aggregating,
  Releasing,
  Closed,
};

const char* session_state_name(SessionState s);

enum class MessageKind {
  RequestResources,     // step 1: UE asks the gNB
  GrantResources,       // step 2: gNB assigns a resource block
  EstablishPeerChannel, // steps 3-4: sidelink channel + allocation sharing
  StartSensing,         // steps a-d: radar operates on the grant
  CompleteSensing,      // step c: features collected, fuse at initiator
  ReleaseResources,     // step 5: UE asks to release
  ConfirmRelease,       // steps 6-7: resource back in the pool
};

const char* message_kind_name(MessageKind m);

struct SessionMessage {
  MessageKind kind;
  int block = -1;  // GrantResources payload
};

struct SidelinkSession {
  int id = 0;
  int ue_id = 0;
  std::vector<int> peer_ues;
  SessionState state = SessionState::Idle;
  int resource_block = -1;
  ChirpConfig chirp;
  int forced_spectrum_block = -1;  // misconfiguration: transmit off-grant
  int samples = 1;                 // gesture samples sensed per participant

  bool multi_ue() const { return !peer_ues.empty(); }
  // The spectrum the radar actually occupies while Sensing.
  int spectrum_block() const {
    return forced_spectrum_block >= 0 ? forced_spectrum_block : resource_block;
  }
};

// Pure transition function; throws ProtocolError on an illegal
// state/message pair.
SidelinkSession step_session(const SidelinkSession& session, const SessionMessage& msg);

enum class InterferenceKind { Crossing, Parallel };

struct InterferenceEvent {
  InterferenceKind kind = InterferenceKind::Crossing;
  int aggressor_session = -1;
  int victim_session = -1;
  double glitch_us = 0.0;  // Crossing
  int ghost_count = 0;     // Parallel
};

// Classifies the interference between an aggressor and a victim chirp
// sharing spectrum: equal slopes within a microsecond start offset are
// parallel, different slopes cross, disjoint bands do not interact.
std::optional<InterferenceEvent> classify_interference(const ChirpConfig& aggressor,
                                                       const ChirpConfig& victim);

// Crossing events blank out points (momentary blind spots); parallel
// events inject ghost points at random positions and frames.
MotionPointCloud apply_interference(const MotionPointCloud& cloud,
                                    const std::vector<InterferenceEvent>& events, Rng& rng,
                                    const InterferenceSection& params,
                                    double chirp_duration_us);

// ---- discrete-event simulation ----

struct UeSpec {
  int id = 0;
  ChirpConfig chirp;
};

struct SessionSpec {
  int id = 0;
  int initiator_ue = 0;
  std::vector<int> peer_ues;
  std::int64_t request_time_us = 0;
  std::int64_t sensing_duration_us = 10000;
  int samples = 1;
  int forced_spectrum_block = -1;
};

struct Scenario {
  int blocks = 8;
  std::int64_t msg_latency_us = 100;
  std::vector<UeSpec> ues;
  std::vector<SessionSpec> sessions;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario make_random_scenario(std::uint64_t seed, const SimSection& cfg);

struct TraceEvent {
  std::int64_t time_us = 0;
  std::string entity;
  std::string event;
  std::string detail;
};

struct SimResult {
  std::vector<TraceEvent> trace;
  std::vector<InterferenceEvent> interference;
  int sessions_completed = 0;
  int grants_queued = 0;

  std::string trace_text() const;
};

// Single-threaded deterministic event loop over a scenario. Sessions are
// driven entirely by queued messages; every state change, grant, release,
// aggregation, and interference event lands in the trace.
SimResult run_simulation(const Scenario& scenario);

void write_trace_csv(const SimResult& result, const std::string& path);

}  // namespace slsense
