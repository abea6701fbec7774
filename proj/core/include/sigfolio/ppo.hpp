#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sigfolio/observation.hpp"
#include "sigfolio/policy_net.hpp"
#include "sigfolio/random.hpp"
#include "sigfolio/trading_env.hpp"

namespace sigfolio {

enum class OptimizerKind {
    Adam,
    Sgd,
};

struct PpoConfig {
    double learning_rate = 5e-4;
    std::size_t sgd_minibatch_size = 300;
    double lambda = 0.9;
    double clip_param = 0.2;
    std::size_t rollout_fragment_length = 60;
    double gamma = 0.99;
    std::size_t epochs_per_batch = 10;
    std::size_t train_batch_size = 3600;
    double entropy_coeff = 0.0;
    double value_coeff = 0.5;
    std::size_t max_iterations = 100;
    double action_sigma = 0.15;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;

    std::size_t fragments_per_batch() const {
        return train_batch_size / rollout_fragment_length;
    }
    void validate() const;
};

// Generalized advantage estimation over one fragment. dones[t] marks steps
// that ended an episode; bootstrap_value stands in for V(s_T) when the
// fragment was cut mid-episode.
struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> targets;  // advantages + values
};
GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const std::uint8_t> dones,
                      double bootstrap_value,
                      double gamma,
                      double lambda);

// Stochastic policy over raw action scores: an isotropic Gaussian around the
// network's score output. The sampled scores go through the softmax, so
// exploration perturbs the portfolio smoothly.
struct GaussianScorePolicy {
    double sigma = 0.15;

    std::vector<double> sample(std::span<const double> mean, Rng& rng) const;
    double log_prob(std::span<const double> mean, std::span<const double> sampled) const;
    double entropy(std::size_t dims) const;
};

// One step of experience. Observations are stored by value so a batch is
// self-contained (it has to cross the worker/leader wire).
struct StepSample {
    Observation obs;
    std::vector<double> raw_action;
    std::vector<double> action_weights;
    double log_prob = 0.0;
    double reward = 0.0;
    double value = 0.0;
    std::uint8_t done = 0;
};

struct Fragment {
    std::uint32_t worker_id = 0;
    std::uint32_t index = 0;  // sequence number within the worker's round
    std::uint64_t snapshot_version = 0;
    double bootstrap_value = 0.0;
    std::vector<StepSample> steps;
};

struct EpisodeStat {
    double total_reward = 0.0;
    std::uint32_t length = 0;
    std::uint8_t completed = 0;
};

struct RolloutBatch {
    std::vector<Fragment> fragments;
    std::vector<EpisodeStat> episode_stats;

    std::size_t step_count() const;
};

// Collects fragments from one environment instance. All randomness derives
// from (run seed, worker id), so the same worker produces the same data in
// any topology. Environment state persists across calls: episodes continue
// through fragment and round boundaries.
class RolloutWorker {
  public:
    RolloutWorker(const PricePanel& panel,
                  const SignalTrackSet& tracks,
                  const EnvConfig& env_config,
                  std::size_t day_lo,
                  std::size_t day_hi,
                  const PpoConfig& ppo_config,
                  std::uint32_t worker_id);

    RolloutBatch collect(const PolicySnapshot& snapshot, std::size_t num_fragments);

    std::uint32_t worker_id() const { return worker_id_; }

  private:
    TradingEnv env_;
    GaussianScorePolicy policy_;
    std::size_t fragment_length_;
    std::uint32_t worker_id_;
    Rng reset_rng_;
    Rng action_rng_;
    bool episode_open_ = false;
    Observation current_obs_;
    double episode_reward_ = 0.0;
    std::uint32_t episode_length_ = 0;
};

struct LossStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double total_loss = 0.0;
};

// Advantage-ready view of a batch: every step flattened, with normalized
// advantages and value targets aligned by index.
struct PreparedBatch {
    std::vector<const StepSample*> steps;
    std::vector<double> advantages;
    std::vector<double> targets;
};
PreparedBatch prepare_batch(const RolloutBatch& batch, const PpoConfig& config);

// Clipped-surrogate loss and its exact parameter gradients (mean over the
// minibatch). grads_out, when given, must already be parameter-sized.
LossStats ppo_loss(const PolicySnapshot& snapshot,
                   const PreparedBatch& batch,
                   std::span<const std::size_t> indices,
                   const PpoConfig& config,
                   std::vector<double>* grads_out);

class AdamOptimizer {
  public:
    AdamOptimizer(std::size_t size, double learning_rate);
    void step(std::vector<double>& params, std::span<const double> grads);

  private:
    double learning_rate_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::int64_t t_ = 0;
};

struct IterationMetrics {
    std::size_t iteration = 0;
    double mean_reward = 0.0;   // mean total reward of episodes seen this round
    double mean_length = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    std::uint64_t version = 0;
};

void write_metrics_csv(std::span<const IterationMetrics> metrics, std::ostream& out);

// Shared update path: GAE, advantage normalization, shuffled minibatch
// epochs, optimizer step. Produces the next snapshot (version + 1) plus the
// iteration's metrics row. Both the in-process trainer and the distributed
// leader drive this same object, which is what makes their metric tables
// byte-identical.
class PpoUpdater {
  public:
    PpoUpdater(const NetConfig& net_config, const PpoConfig& ppo_config);

    struct UpdateResult {
        PolicySnapshot snapshot;
        IterationMetrics metrics;
    };
    UpdateResult update(const RolloutBatch& batch,
                        const PolicySnapshot& snapshot,
                        std::size_t iteration);

  private:
    PpoConfig config_;
    AdamOptimizer adam_;
    Rng shuffle_rng_;
};

struct TrainResult {
    PolicySnapshot final_snapshot;
    std::vector<IterationMetrics> metrics;
};

// Called after every iteration with the freshly updated snapshot.
using IterationCallback =
    std::function<void(const PolicySnapshot&, const IterationMetrics&)>;

// Single-process training loop: one worker, immediate updates.
TrainResult train_inprocess(const PricePanel& panel,
                            const SignalTrackSet& tracks,
                            const EnvConfig& env_config,
                            std::size_t day_lo,
                            std::size_t day_hi,
                            const NetConfig& net_config,
                            const PpoConfig& ppo_config,
                            const IterationCallback& on_iteration = {});

}  // namespace sigfolio
