#include "sigfolio/orchestrator.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace sigfolio {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
    }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        const std::uint64_t bits = u64();
        double v = 0.0;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::vector<std::uint8_t> blob(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }
    void f64_into(std::vector<double>& out, std::size_t n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = f64();
        }
    }
    bool exhausted() const { return pos_ == bytes_.size(); }

  private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw std::runtime_error("truncated wire message");
        }
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_frame(const RoundMessage& message) {
    std::vector<std::uint8_t> payload;
    payload.reserve(13 + message.body.size());
    payload.push_back(static_cast<std::uint8_t>(message.type));
    put_u64(payload, message.version);
    put_u32(payload, message.worker_id);
    payload.insert(payload.end(), message.body.begin(), message.body.end());

    std::vector<std::uint8_t> frame;
    frame.reserve(4 + payload.size());
    put_u32(frame, static_cast<std::uint32_t>(payload.size()));
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

RoundMessage decode_frame(std::span<const std::uint8_t> frame) {
    Reader reader(frame);
    const std::uint32_t length = reader.u32();
    if (frame.size() != 4 + static_cast<std::size_t>(length)) {
        throw std::runtime_error("frame length prefix does not match the payload");
    }
    RoundMessage message;
    message.type = static_cast<MessageType>(reader.u8());
    message.version = reader.u64();
    message.worker_id = reader.u32();
    message.body = reader.blob(length - 13);
    return message;
}

std::vector<std::uint8_t> serialize_batch(const RolloutBatch& batch) {
    std::vector<std::uint8_t> out;
    put_u32(out, static_cast<std::uint32_t>(batch.fragments.size()));
    for (const Fragment& fragment : batch.fragments) {
        put_u32(out, fragment.worker_id);
        put_u32(out, fragment.index);
        put_u64(out, fragment.snapshot_version);
        put_f64(out, fragment.bootstrap_value);
        put_u32(out, static_cast<std::uint32_t>(fragment.steps.size()));
        for (const StepSample& step : fragment.steps) {
            put_u32(out, static_cast<std::uint32_t>(step.obs.num_symbols));
            put_u32(out, static_cast<std::uint32_t>(step.obs.channels));
            put_u32(out, static_cast<std::uint32_t>(step.obs.window));
            put_u64(out, static_cast<std::uint64_t>(step.obs.day_index));
            put_i32(out, step.obs.as_of.days_since_epoch());
            for (const double x : step.obs.tensor) {
                put_f64(out, x);
            }
            for (const double x : step.obs.prev_weights) {
                put_f64(out, x);
            }
            put_u32(out, static_cast<std::uint32_t>(step.raw_action.size()));
            for (const double x : step.raw_action) {
                put_f64(out, x);
            }
            for (const double x : step.action_weights) {
                put_f64(out, x);
            }
            put_f64(out, step.log_prob);
            put_f64(out, step.reward);
            put_f64(out, step.value);
            out.push_back(step.done);
        }
    }
    put_u32(out, static_cast<std::uint32_t>(batch.episode_stats.size()));
    for (const EpisodeStat& stat : batch.episode_stats) {
        put_f64(out, stat.total_reward);
        put_u32(out, stat.length);
        out.push_back(stat.completed);
    }
    return out;
}

RolloutBatch deserialize_batch(std::span<const std::uint8_t> bytes) {
    Reader reader(bytes);
    RolloutBatch batch;
    const std::uint32_t fragment_count = reader.u32();
    batch.fragments.reserve(fragment_count);
    for (std::uint32_t f = 0; f < fragment_count; ++f) {
        Fragment fragment;
        fragment.worker_id = reader.u32();
        fragment.index = reader.u32();
        fragment.snapshot_version = reader.u64();
        fragment.bootstrap_value = reader.f64();
        const std::uint32_t step_count = reader.u32();
        fragment.steps.reserve(step_count);
        for (std::uint32_t t = 0; t < step_count; ++t) {
            StepSample step;
            step.obs.num_symbols = reader.u32();
            step.obs.channels = reader.u32();
            step.obs.window = reader.u32();
            step.obs.day_index = static_cast<std::size_t>(reader.u64());
            step.obs.as_of = Date::from_days(reader.i32());
            reader.f64_into(step.obs.tensor,
                            step.obs.num_symbols * step.obs.channels * step.obs.window);
            reader.f64_into(step.obs.prev_weights, step.obs.num_symbols + 1);
            const std::uint32_t action_size = reader.u32();
            reader.f64_into(step.raw_action, action_size);
            reader.f64_into(step.action_weights, action_size);
            step.log_prob = reader.f64();
            step.reward = reader.f64();
            step.value = reader.f64();
            step.done = reader.u8();
            fragment.steps.push_back(std::move(step));
        }
        batch.fragments.push_back(std::move(fragment));
    }
    const std::uint32_t stat_count = reader.u32();
    for (std::uint32_t i = 0; i < stat_count; ++i) {
        EpisodeStat stat;
        stat.total_reward = reader.f64();
        stat.length = reader.u32();
        stat.completed = reader.u8();
        batch.episode_stats.push_back(stat);
    }
    if (!reader.exhausted()) {
        throw std::runtime_error("trailing bytes after the batch payload");
    }
    return batch;
}

void MessageChannel::send(std::vector<std::uint8_t> frame) {
    {
        const std::lock_guard<std::mutex> lock(mutex_);
        frames_.push_back(std::move(frame));
    }
    ready_.notify_one();
}

std::optional<std::vector<std::uint8_t>> MessageChannel::recv(
    std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!ready_.wait_for(lock, timeout, [&] { return !frames_.empty(); })) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> frame = std::move(frames_.front());
    frames_.pop_front();
    return frame;
}

WorkerHost::WorkerHost(const PricePanel& panel,
                       const SignalTrackSet& tracks,
                       const EnvConfig& env_config,
                       std::size_t day_lo,
                       std::size_t day_hi,
                       const PpoConfig& ppo_config,
                       WorkerSpec spec,
                       WorkerFaults faults)
    : spec_(spec),
      faults_(faults),
      rollout_(panel, tracks, env_config, day_lo, day_hi, ppo_config, spec.worker_id),
      to_worker_(std::make_unique<MessageChannel>()),
      from_worker_(std::make_unique<MessageChannel>()) {
    thread_ = std::thread([this] { serve(); });
}

WorkerHost::~WorkerHost() {
    to_worker_->send(encode_frame(RoundMessage{MessageType::Shutdown, 0, spec_.worker_id, {}}));
    if (thread_.joinable()) {
        thread_.join();
    }
}

void WorkerHost::serve() {
    try {
        serve_loop();
    } catch (...) {
        // A broken worker goes silent; the leader treats it as lost.
    }
}

void WorkerHost::serve_loop() {
    for (;;) {
        auto frame = to_worker_->recv(std::chrono::hours(24));
        if (!frame) {
            continue;
        }
        const RoundMessage message = decode_frame(*frame);
        switch (message.type) {
            case MessageType::Shutdown:
                return;
            case MessageType::SnapshotBroadcast: {
                snapshot_ = snapshot_from_bytes(message.body);
                from_worker_->send(encode_frame(
                    RoundMessage{MessageType::Ack, snapshot_->version(), spec_.worker_id, {}}));
                break;
            }
            case MessageType::CollectRequest: {
                if (faults_.drop_next_collect) {
                    faults_.drop_next_collect = false;
                    break;  // stay silent; the leader sees a timeout
                }
                if (!snapshot_) {
                    break;
                }
                RolloutBatch batch = rollout_.collect(*snapshot_, spec_.fragment_quota);
                std::uint64_t reported = snapshot_->version();
                if (faults_.stale_version_once) {
                    faults_.stale_version_once = false;
                    reported = reported == 0 ? 0 : reported - 1;
                    for (Fragment& fragment : batch.fragments) {
                        fragment.snapshot_version = reported;
                    }
                }
                from_worker_->send(encode_frame(RoundMessage{MessageType::RolloutBatchReply,
                                                             reported, spec_.worker_id,
                                                             serialize_batch(batch)}));
                break;
            }
            default:
                break;
        }
    }
}

LeaderOrchestrator::LeaderOrchestrator() : LeaderOrchestrator(Config{}) {}

LeaderOrchestrator::LeaderOrchestrator(Config config) : config_(config) {}

void LeaderOrchestrator::attach(WorkerHost& worker) {
    for (const Endpoint& endpoint : endpoints_) {
        if (endpoint.host->spec().worker_id == worker.spec().worker_id) {
            throw std::invalid_argument("duplicate worker id");
        }
    }
    endpoints_.push_back(Endpoint{&worker, true});
    std::sort(endpoints_.begin(), endpoints_.end(), [](const Endpoint& a, const Endpoint& b) {
        return a.host->spec().worker_id < b.host->spec().worker_id;
    });
}

std::size_t LeaderOrchestrator::live_workers() const {
    std::size_t n = 0;
    for (const Endpoint& endpoint : endpoints_) {
        n += endpoint.live;
    }
    return n;
}

LeaderOrchestrator::BroadcastResult LeaderOrchestrator::broadcast(
    const PolicySnapshot& snapshot) {
    if (has_broadcast_ && snapshot.version() <= broadcast_version_) {
        throw std::logic_error("broadcast version must strictly increase (got " +
                               std::to_string(snapshot.version()) + " after " +
                               std::to_string(broadcast_version_) + ")");
    }
    const auto bytes = checkpoint_bytes(snapshot);
    for (Endpoint& endpoint : endpoints_) {
        if (!endpoint.live) {
            continue;
        }
        endpoint.host->to_worker().send(encode_frame(
            RoundMessage{MessageType::SnapshotBroadcast, snapshot.version(),
                         endpoint.host->spec().worker_id, bytes}));
    }

    BroadcastResult result;
    const std::size_t quorum =
        config_.ack_quorum == 0 ? live_workers() : std::min(config_.ack_quorum, live_workers());
    for (Endpoint& endpoint : endpoints_) {
        if (!endpoint.live) {
            continue;
        }
        const auto frame = endpoint.host->from_worker().recv(config_.timeout);
        if (!frame) {
            endpoint.live = false;
            result.lost_workers.push_back(endpoint.host->spec().worker_id);
            continue;
        }
        const RoundMessage message = decode_frame(*frame);
        if (message.type == MessageType::Ack && message.version == snapshot.version()) {
            ++result.acks;
        } else {
            endpoint.live = false;
            result.lost_workers.push_back(endpoint.host->spec().worker_id);
        }
    }
    if (result.acks < quorum) {
        throw std::runtime_error("broadcast quorum not reached: " +
                                 std::to_string(result.acks) + " of " + std::to_string(quorum));
    }
    broadcast_version_ = snapshot.version();
    has_broadcast_ = true;
    return result;
}

LeaderOrchestrator::RoundOutcome LeaderOrchestrator::run_round() {
    if (!has_broadcast_) {
        throw std::logic_error("run_round before any broadcast");
    }
    for (Endpoint& endpoint : endpoints_) {
        if (!endpoint.live) {
            continue;
        }
        endpoint.host->to_worker().send(encode_frame(
            RoundMessage{MessageType::CollectRequest, broadcast_version_,
                         endpoint.host->spec().worker_id, {}}));
    }

    RoundOutcome outcome;
    std::vector<RolloutBatch> parts;
    for (Endpoint& endpoint : endpoints_) {
        if (!endpoint.live) {
            continue;
        }
        const std::uint32_t worker_id = endpoint.host->spec().worker_id;
        const auto frame = endpoint.host->from_worker().recv(config_.timeout);
        if (!frame) {
            endpoint.live = false;
            outcome.lost_workers.push_back(worker_id);
            continue;
        }
        const RoundMessage message = decode_frame(*frame);
        if (message.type != MessageType::RolloutBatchReply) {
            endpoint.live = false;
            outcome.lost_workers.push_back(worker_id);
            continue;
        }
        if (message.version != broadcast_version_) {
            ++rejected_batches_;
            outcome.stale_workers.push_back(worker_id);
            continue;
        }
        RolloutBatch part = deserialize_batch(message.body);
        const std::size_t quota = endpoint.host->spec().fragment_quota;
        if (part.fragments.size() != quota) {
            throw std::runtime_error("worker " + std::to_string(worker_id) +
                                     " returned the wrong fragment count");
        }
        for (std::size_t i = 0; i < part.fragments.size(); ++i) {
            const Fragment& fragment = part.fragments[i];
            if (fragment.worker_id != worker_id ||
                fragment.index != static_cast<std::uint32_t>(i) ||
                fragment.snapshot_version != broadcast_version_) {
                throw std::runtime_error("fragment sequence check failed for worker " +
                                         std::to_string(worker_id));
            }
        }
        parts.push_back(std::move(part));
    }

    if (!outcome.lost_workers.empty() || !outcome.stale_workers.empty()) {
        return outcome;  // round failed; the caller retries with the remaining workers
    }

    // Deterministic aggregation: endpoints_ is sorted by worker id and each
    // part arrives in fragment order.
    RolloutBatch aggregated;
    for (RolloutBatch& part : parts) {
        for (Fragment& fragment : part.fragments) {
            aggregated.fragments.push_back(std::move(fragment));
        }
        for (const EpisodeStat& stat : part.episode_stats) {
            aggregated.episode_stats.push_back(stat);
        }
    }
    outcome.batch = std::move(aggregated);
    return outcome;
}

void LeaderOrchestrator::shutdown() {
    for (Endpoint& endpoint : endpoints_) {
        endpoint.live = false;
    }
}

TrainResult train_orchestrated(const PricePanel& panel,
                               const SignalTrackSet& tracks,
                               const EnvConfig& env_config,
                               std::size_t day_lo,
                               std::size_t day_hi,
                               const NetConfig& net_config,
                               const PpoConfig& ppo_config,
                               std::size_t num_workers,
                               const IterationCallback& on_iteration) {
    ppo_config.validate();
    net_config.validate();
    if (num_workers < 1) {
        throw std::invalid_argument("need at least one worker");
    }
    const std::size_t total_fragments = ppo_config.fragments_per_batch();
    if (total_fragments % num_workers != 0) {
        throw std::invalid_argument("fragments per batch must divide evenly across workers");
    }
    const std::size_t quota = total_fragments / num_workers;

    std::vector<std::unique_ptr<WorkerHost>> hosts;
    hosts.reserve(num_workers);
    LeaderOrchestrator leader;
    for (std::size_t w = 0; w < num_workers; ++w) {
        hosts.push_back(std::make_unique<WorkerHost>(
            panel, tracks, env_config, day_lo, day_hi, ppo_config,
            WorkerSpec{static_cast<std::uint32_t>(w), quota}));
        leader.attach(*hosts.back());
    }

    PolicySnapshot snapshot =
        PolicySnapshot::init(net_config, derive_seed(ppo_config.seed, 0x6e6574 /* net */));
    PpoUpdater updater(net_config, ppo_config);
    leader.broadcast(snapshot);

    TrainResult result{snapshot, {}};
    result.metrics.reserve(ppo_config.max_iterations);
    for (std::size_t iteration = 0; iteration < ppo_config.max_iterations; ++iteration) {
        auto outcome = leader.run_round();
        while (!outcome.batch) {
            if (leader.live_workers() == 0) {
                throw std::runtime_error("all workers lost; cannot continue training");
            }
            outcome = leader.run_round();  // retry with the remaining workers
        }
        auto [next, metrics] = updater.update(*outcome.batch, snapshot, iteration);
        snapshot = std::move(next);
        result.metrics.push_back(metrics);
        leader.broadcast(snapshot);
        if (on_iteration) {
            on_iteration(snapshot, metrics);
        }
    }
    result.final_snapshot = std::move(snapshot);
    return result;
}

}  // namespace sigfolio
