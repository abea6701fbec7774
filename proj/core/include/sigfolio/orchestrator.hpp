#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "sigfolio/ppo.hpp"

namespace sigfolio {

// ---------------------------------------------------------------------------
// Wire format. Every message is one length-prefixed little-endian frame:
//   u32 payload_length | u8 type | u64 version | u32 worker_id | body
// Snapshot bodies reuse the checkpoint format; batch bodies use the trace
// format below. Numbers are little-endian throughout; doubles travel as raw
// IEEE-754 bits, so a round trip is exact.
// ---------------------------------------------------------------------------

enum class MessageType : std::uint8_t {
    SnapshotBroadcast = 1,
    CollectRequest = 2,
    RolloutBatchReply = 3,
    Ack = 4,
    Shutdown = 5,
};

struct RoundMessage {
    MessageType type = MessageType::Ack;
    std::uint64_t version = 0;
    std::uint32_t worker_id = 0;
    std::vector<std::uint8_t> body;
};

std::vector<std::uint8_t> encode_frame(const RoundMessage& message);
RoundMessage decode_frame(std::span<const std::uint8_t> frame);

std::vector<std::uint8_t> serialize_batch(const RolloutBatch& batch);
RolloutBatch deserialize_batch(std::span<const std::uint8_t> bytes);

// Ordered, reliable, in-process message channel.
class MessageChannel {
  public:
    void send(std::vector<std::uint8_t> frame);
    std::optional<std::vector<std::uint8_t>> recv(std::chrono::milliseconds timeout);

  private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<std::vector<std::uint8_t>> frames_;
};

struct WorkerSpec {
    std::uint32_t worker_id = 0;
    std::size_t fragment_quota = 1;
};

// Test hooks for fault injection.
struct WorkerFaults {
    bool drop_next_collect = false;  // ignore one collect request (looks like a timeout)
    bool stale_version_once = false; // tag one batch with version - 1
};

// One worker: a thread holding an environment copy and the latest policy,
// producing its quota of fragments per round on request.
class WorkerHost {
  public:
    WorkerHost(const PricePanel& panel,
               const SignalTrackSet& tracks,
               const EnvConfig& env_config,
               std::size_t day_lo,
               std::size_t day_hi,
               const PpoConfig& ppo_config,
               WorkerSpec spec,
               WorkerFaults faults = {});
    ~WorkerHost();

    WorkerHost(const WorkerHost&) = delete;
    WorkerHost& operator=(const WorkerHost&) = delete;

    const WorkerSpec& spec() const { return spec_; }
    MessageChannel& to_worker() { return *to_worker_; }
    MessageChannel& from_worker() { return *from_worker_; }

  private:
    void serve();
    void serve_loop();

    WorkerSpec spec_;
    WorkerFaults faults_;
    RolloutWorker rollout_;
    std::unique_ptr<MessageChannel> to_worker_;
    std::unique_ptr<MessageChannel> from_worker_;
    std::optional<PolicySnapshot> snapshot_;
    std::thread thread_;
};

// Synchronous round driver. Broadcasts strictly increasing snapshot versions,
// requests collection, validates and aggregates worker batches in
// (worker id, fragment index) order.
class LeaderOrchestrator {
  public:
    struct Config {
        std::chrono::milliseconds timeout{10000};
        std::size_t ack_quorum = 0;  // 0 means every live worker must ack
    };

    LeaderOrchestrator();
    explicit LeaderOrchestrator(Config config);

    void attach(WorkerHost& worker);

    struct BroadcastResult {
        std::size_t acks = 0;
        std::vector<std::uint32_t> lost_workers;
    };
    // Throws on a version that does not strictly increase. Blocks until the
    // quorum acknowledges; workers that time out are dropped from the round.
    BroadcastResult broadcast(const PolicySnapshot& snapshot);

    struct RoundOutcome {
        std::optional<RolloutBatch> batch;   // set when the round succeeded
        std::vector<std::uint32_t> lost_workers;
        std::vector<std::uint32_t> stale_workers;
    };
    RoundOutcome run_round();

    void shutdown();

    std::size_t live_workers() const;
    std::size_t rejected_batches() const { return rejected_batches_; }

  private:
    struct Endpoint {
        WorkerHost* host;
        bool live = true;
    };

    Config config_;
    std::vector<Endpoint> endpoints_;
    std::uint64_t broadcast_version_ = 0;
    bool has_broadcast_ = false;
    std::size_t rejected_batches_ = 0;
};

// Training loop over the leader/worker topology. With num_workers = 1 this
// reproduces train_inprocess byte for byte (same seeds, same update path,
// the batch just crosses the in-process wire).
TrainResult train_orchestrated(const PricePanel& panel,
                               const SignalTrackSet& tracks,
                               const EnvConfig& env_config,
                               std::size_t day_lo,
                               std::size_t day_hi,
                               const NetConfig& net_config,
                               const PpoConfig& ppo_config,
                               std::size_t num_workers,
                               const IterationCallback& on_iteration = {});

}  // namespace sigfolio
