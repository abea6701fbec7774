#include "sigfolio/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sigfolio/csv.hpp"

namespace sigfolio {

void PpoConfig::validate() const {
    if (!(clip_param > 0.0 && clip_param < 1.0)) {
        throw std::invalid_argument("CLIP_PARAM must lie in (0, 1)");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("LAMBDA must lie in [0, 1]");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("gamma must lie in (0, 1]");
    }
    if (sgd_minibatch_size < 1 || sgd_minibatch_size > train_batch_size) {
        throw std::invalid_argument("SGD_MINIBATCH_SIZE must lie in [1, train_batch_size]");
    }
    if (rollout_fragment_length < 1) {
        throw std::invalid_argument("ROLLOUT_FRAGMENT_LENGTH must be at least 1");
    }
    if (train_batch_size % rollout_fragment_length != 0) {
        throw std::invalid_argument(
            "train_batch_size must be a multiple of ROLLOUT_FRAGMENT_LENGTH");
    }
    if (epochs_per_batch < 1 || max_iterations < 1) {
        throw std::invalid_argument("epochs_per_batch and max_iterations must be at least 1");
    }
    if (!(action_sigma > 0.0)) {
        throw std::invalid_argument("action_sigma must be positive");
    }
    if (!(learning_rate >= 0.0) || !(value_coeff >= 0.0) || !(entropy_coeff >= 0.0)) {
        throw std::invalid_argument("rates and coefficients must be non-negative");
    }
}

GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const std::uint8_t> dones,
                      double bootstrap_value,
                      double gamma,
                      double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n || dones.size() != n) {
        throw std::invalid_argument("GAE inputs differ in length");
    }
    GaeResult result;
    result.advantages.assign(n, 0.0);
    result.targets.assign(n, 0.0);
    double carry = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double not_done = dones[t] ? 0.0 : 1.0;
        const double next_value = (t + 1 < n) ? values[t + 1] : bootstrap_value;
        const double delta = rewards[t] + gamma * next_value * not_done - values[t];
        carry = delta + gamma * lambda * not_done * carry;
        result.advantages[t] = carry;
        result.targets[t] = carry + values[t];
    }
    return result;
}

std::vector<double> GaussianScorePolicy::sample(std::span<const double> mean, Rng& rng) const {
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        out[i] = mean[i] + sigma * rng.normal();
    }
    return out;
}

double GaussianScorePolicy::log_prob(std::span<const double> mean,
                                     std::span<const double> sampled) const {
    if (mean.size() != sampled.size()) {
        throw std::invalid_argument("log_prob dimensions differ");
    }
    const double log_norm = std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
    double lp = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double z = (sampled[i] - mean[i]) / sigma;
        lp += -0.5 * z * z - log_norm;
    }
    return lp;
}

double GaussianScorePolicy::entropy(std::size_t dims) const {
    return static_cast<double>(dims) *
           (0.5 + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma));
}

std::size_t RolloutBatch::step_count() const {
    std::size_t n = 0;
    for (const Fragment& f : fragments) {
        n += f.steps.size();
    }
    return n;
}

RolloutWorker::RolloutWorker(const PricePanel& panel,
                             const SignalTrackSet& tracks,
                             const EnvConfig& env_config,
                             std::size_t day_lo,
                             std::size_t day_hi,
                             const PpoConfig& ppo_config,
                             std::uint32_t worker_id)
    : env_(panel, tracks, env_config, day_lo, day_hi),
      policy_{ppo_config.action_sigma},
      fragment_length_(ppo_config.rollout_fragment_length),
      worker_id_(worker_id),
      reset_rng_(derive_seed(ppo_config.seed, 0x7265736574 /* reset */, worker_id)),
      action_rng_(derive_seed(ppo_config.seed, 0x616374 /* act */, worker_id)) {}

RolloutBatch RolloutWorker::collect(const PolicySnapshot& snapshot,
                                    std::size_t num_fragments) {
    RolloutBatch batch;
    batch.fragments.reserve(num_fragments);

    for (std::size_t f = 0; f < num_fragments; ++f) {
        Fragment fragment;
        fragment.worker_id = worker_id_;
        fragment.index = static_cast<std::uint32_t>(f);
        fragment.snapshot_version = snapshot.version();
        fragment.steps.reserve(fragment_length_);

        bool last_done = false;
        for (std::size_t t = 0; t < fragment_length_; ++t) {
            if (!episode_open_) {
                current_obs_ = env_.reset_random(reset_rng_);
                episode_open_ = true;
                episode_reward_ = 0.0;
                episode_length_ = 0;
            }

            const ForwardResult out = forward(snapshot, current_obs_);
            std::vector<double> raw = policy_.sample(out.action_scores, action_rng_);
            const double log_prob = policy_.log_prob(out.action_scores, raw);
            const PortfolioVector weights = action_to_weights(raw);

            auto env_out = env_.step(raw);
            episode_reward_ += env_out.reward;
            ++episode_length_;

            StepSample sample;
            sample.obs = std::move(current_obs_);
            sample.raw_action = std::move(raw);
            sample.action_weights = weights.values();
            sample.log_prob = log_prob;
            sample.reward = env_out.reward;
            sample.value = out.value;
            sample.done = env_out.done ? 1 : 0;
            fragment.steps.push_back(std::move(sample));

            current_obs_ = std::move(env_out.observation);
            last_done = env_out.done;
            if (env_out.done) {
                batch.episode_stats.push_back(
                    EpisodeStat{episode_reward_, episode_length_, 1});
                episode_open_ = false;
            }
        }

        fragment.bootstrap_value =
            last_done ? 0.0 : forward(snapshot, current_obs_).value;
        batch.fragments.push_back(std::move(fragment));
    }

    // Mid-episode progress, so a round with no completed episode still
    // reports a defined (and deterministic) reward statistic.
    if (episode_open_) {
        batch.episode_stats.push_back(EpisodeStat{episode_reward_, episode_length_, 0});
    }
    return batch;
}

PreparedBatch prepare_batch(const RolloutBatch& batch, const PpoConfig& config) {
    PreparedBatch prepared;
    const std::size_t n = batch.step_count();
    prepared.steps.reserve(n);
    prepared.advantages.reserve(n);
    prepared.targets.reserve(n);

    for (const Fragment& fragment : batch.fragments) {
        std::vector<double> rewards, values;
        std::vector<std::uint8_t> dones;
        rewards.reserve(fragment.steps.size());
        values.reserve(fragment.steps.size());
        dones.reserve(fragment.steps.size());
        for (const StepSample& step : fragment.steps) {
            rewards.push_back(step.reward);
            values.push_back(step.value);
            dones.push_back(step.done);
        }
        const GaeResult gae = compute_gae(rewards, values, dones, fragment.bootstrap_value,
                                          config.gamma, config.lambda);
        for (std::size_t t = 0; t < fragment.steps.size(); ++t) {
            prepared.steps.push_back(&fragment.steps[t]);
            prepared.advantages.push_back(gae.advantages[t]);
            prepared.targets.push_back(gae.targets[t]);
        }
    }

    // Normalize advantages over the whole train batch.
    double mean = 0.0;
    for (const double a : prepared.advantages) {
        mean += a;
    }
    mean /= static_cast<double>(prepared.advantages.size());
    double var = 0.0;
    for (const double a : prepared.advantages) {
        var += (a - mean) * (a - mean);
    }
    const double stddev =
        std::max(std::sqrt(var / static_cast<double>(prepared.advantages.size())), 1e-8);
    for (double& a : prepared.advantages) {
        a = (a - mean) / stddev;
    }
    return prepared;
}

LossStats ppo_loss(const PolicySnapshot& snapshot,
                   const PreparedBatch& batch,
                   std::span<const std::size_t> indices,
                   const PpoConfig& config,
                   std::vector<double>* grads_out) {
    if (indices.empty()) {
        throw std::invalid_argument("empty minibatch");
    }
    if (grads_out != nullptr &&
        grads_out->size() != parameter_count(snapshot.config())) {
        throw std::invalid_argument("gradient buffer has the wrong size");
    }

    const GaussianScorePolicy policy{config.action_sigma};
    const double inv_batch = 1.0 / static_cast<double>(indices.size());
    const double sigma_sq = config.action_sigma * config.action_sigma;

    LossStats stats;
    for (const std::size_t i : indices) {
        const StepSample& step = *batch.steps[i];
        const double advantage = batch.advantages[i];
        const double target = batch.targets[i];

        const ForwardResult out = forward(snapshot, step.obs);
        const double new_log_prob = policy.log_prob(out.action_scores, step.raw_action);
        const double ratio = std::exp(new_log_prob - step.log_prob);
        const double clipped_ratio =
            std::clamp(ratio, 1.0 - config.clip_param, 1.0 + config.clip_param);

        const double unclipped = ratio * advantage;
        const double clipped = clipped_ratio * advantage;
        const double policy_term = std::min(unclipped, clipped);
        const double value_error = out.value - target;

        stats.policy_loss += -policy_term * inv_batch;
        stats.value_loss += value_error * value_error * inv_batch;
        stats.entropy += policy.entropy(out.action_scores.size()) * inv_batch;

        if (!std::isfinite(policy_term) || !std::isfinite(value_error)) {
            std::ostringstream msg;
            msg << "non-finite PPO loss at sample " << i << " (ratio=" << ratio
                << ", value=" << out.value << ")";
            throw std::runtime_error(msg.str());
        }

        if (grads_out == nullptr) {
            continue;
        }
        // Policy gradient flows through the unclipped ratio only while it is
        // the active branch; once the clip binds, the sample contributes
        // nothing to the policy direction.
        const double d_loss_d_logprob =
            unclipped <= clipped ? -advantage * ratio * inv_batch : 0.0;
        std::vector<double> grad_scores(out.action_scores.size(), 0.0);
        if (d_loss_d_logprob != 0.0) {
            for (std::size_t j = 0; j < grad_scores.size(); ++j) {
                // d log_prob / d mean_j for the Gaussian around the scores.
                grad_scores[j] = d_loss_d_logprob *
                                 (step.raw_action[j] - out.action_scores[j]) / sigma_sq;
            }
        }
        const double grad_value = config.value_coeff * 2.0 * value_error * inv_batch;

        const std::vector<double> grads =
            backward(snapshot, out.trace, grad_scores, grad_value);
        for (std::size_t j = 0; j < grads.size(); ++j) {
            (*grads_out)[j] += grads[j];
        }
    }

    stats.total_loss = stats.policy_loss + config.value_coeff * stats.value_loss -
                       config.entropy_coeff * stats.entropy;
    return stats;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double learning_rate)
    : learning_rate_(learning_rate), m_(size, 0.0), v_(size, 0.0) {}

void AdamOptimizer::step(std::vector<double>& params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("optimizer state does not match the parameters");
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    ++t_;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1 * m_[i] + (1.0 - beta1) * grads[i];
        v_[i] = beta2 * v_[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double m_hat = m_[i] / bias1;
        const double v_hat = v_[i] / bias2;
        params[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + eps);
    }
}

void write_metrics_csv(std::span<const IterationMetrics> metrics, std::ostream& out) {
    out << "iteration,mean_reward,mean_length,policy_loss,value_loss,entropy,version\n";
    for (const IterationMetrics& row : metrics) {
        out << row.iteration << ',' << format_double(row.mean_reward) << ','
            << format_double(row.mean_length) << ',' << format_double(row.policy_loss) << ','
            << format_double(row.value_loss) << ',' << format_double(row.entropy) << ','
            << row.version << "\n";
    }
}

PpoUpdater::PpoUpdater(const NetConfig& net_config, const PpoConfig& ppo_config)
    : config_(ppo_config),
      adam_(parameter_count(net_config), ppo_config.learning_rate),
      shuffle_rng_(derive_seed(ppo_config.seed, 0x73687566 /* shuf */)) {
    config_.validate();
}

PpoUpdater::UpdateResult PpoUpdater::update(const RolloutBatch& batch,
                                            const PolicySnapshot& snapshot,
                                            std::size_t iteration) {
    if (batch.fragments.empty()) {
        throw std::invalid_argument("cannot update from an empty batch");
    }
    const PreparedBatch prepared = prepare_batch(batch, config_);
    const std::size_t n = prepared.steps.size();

    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    std::vector<double> params(snapshot.flat().begin(), snapshot.flat().end());
    std::vector<double> grads(params.size(), 0.0);

    LossStats sums;
    std::size_t minibatches = 0;
    for (std::size_t epoch = 0; epoch < config_.epochs_per_batch; ++epoch) {
        shuffle(indices, shuffle_rng_);
        for (std::size_t start = 0; start < n; start += config_.sgd_minibatch_size) {
            const std::size_t count = std::min(config_.sgd_minibatch_size, n - start);
            const std::span<const std::size_t> slice(indices.data() + start, count);

            const PolicySnapshot working =
                snapshot.with_parameters(params, snapshot.version());
            std::fill(grads.begin(), grads.end(), 0.0);
            const LossStats stats = ppo_loss(working, prepared, slice, config_, &grads);

            if (config_.optimizer == OptimizerKind::Adam) {
                adam_.step(params, grads);
            } else {
                for (std::size_t i = 0; i < params.size(); ++i) {
                    params[i] -= config_.learning_rate * grads[i];
                }
            }

            sums.policy_loss += stats.policy_loss;
            sums.value_loss += stats.value_loss;
            sums.entropy += stats.entropy;
            sums.total_loss += stats.total_loss;
            ++minibatches;
        }
    }
    for (const double p : params) {
        if (!std::isfinite(p)) {
            throw std::runtime_error("training diverged: non-finite parameters after update");
        }
    }

    double reward_sum = 0.0;
    double length_sum = 0.0;
    std::size_t completed = 0;
    for (const EpisodeStat& stat : batch.episode_stats) {
        if (stat.completed) {
            reward_sum += stat.total_reward;
            length_sum += static_cast<double>(stat.length);
            ++completed;
        }
    }
    if (completed == 0) {
        for (const EpisodeStat& stat : batch.episode_stats) {
            reward_sum += stat.total_reward;
            length_sum += static_cast<double>(stat.length);
        }
        completed = batch.episode_stats.size();
    }

    PolicySnapshot next = snapshot.with_parameters(std::move(params), snapshot.version() + 1);
    IterationMetrics metrics;
    metrics.iteration = iteration;
    metrics.mean_reward = completed > 0 ? reward_sum / static_cast<double>(completed) : 0.0;
    metrics.mean_length = completed > 0 ? length_sum / static_cast<double>(completed) : 0.0;
    const double scale = minibatches > 0 ? 1.0 / static_cast<double>(minibatches) : 0.0;
    metrics.policy_loss = sums.policy_loss * scale;
    metrics.value_loss = sums.value_loss * scale;
    metrics.entropy = sums.entropy * scale;
    metrics.version = next.version();
    return UpdateResult{std::move(next), metrics};
}

TrainResult train_inprocess(const PricePanel& panel,
                            const SignalTrackSet& tracks,
                            const EnvConfig& env_config,
                            std::size_t day_lo,
                            std::size_t day_hi,
                            const NetConfig& net_config,
                            const PpoConfig& ppo_config,
                            const IterationCallback& on_iteration) {
    ppo_config.validate();
    net_config.validate();

    PolicySnapshot snapshot =
        PolicySnapshot::init(net_config, derive_seed(ppo_config.seed, 0x6e6574 /* net */));
    RolloutWorker worker(panel, tracks, env_config, day_lo, day_hi, ppo_config, 0);
    PpoUpdater updater(net_config, ppo_config);

    TrainResult result{snapshot, {}};
    result.metrics.reserve(ppo_config.max_iterations);
    for (std::size_t iteration = 0; iteration < ppo_config.max_iterations; ++iteration) {
        const RolloutBatch batch =
            worker.collect(snapshot, ppo_config.fragments_per_batch());
        auto [next, metrics] = updater.update(batch, snapshot, iteration);
        snapshot = std::move(next);
        result.metrics.push_back(metrics);
        if (on_iteration) {
            on_iteration(snapshot, metrics);
        }
    }
    result.final_snapshot = std::move(snapshot);
    return result;
}

}  // namespace sigfolio
