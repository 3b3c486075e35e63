#include "tandem/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tandem {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

GaeResult gae(const std::vector<double>& rewards,
              const std::vector<double>& values,
              const std::vector<uint8_t>& terminal, double gamma,
              double lambda) {
  const size_t T = rewards.size();
  if (values.size() != T + 1 || terminal.size() != T)
    throw Error("gae: length mismatch (values needs T+1 entries)");
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0)
    throw Error("gae: gamma and lambda must lie in [0, 1]");
  GaeResult out;
  out.advantages.assign(T, 0.0);
  out.returns.assign(T, 0.0);
  double acc = 0.0;
  for (size_t i = T; i-- > 0;) {
    const double cont = terminal[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * cont * values[i + 1] - values[i];
    acc = delta + gamma * lambda * cont * acc;
    out.advantages[i] = acc;
    out.returns[i] = acc + values[i];
  }
  return out;
}

PpoUpdater::PpoUpdater(int obs_dim, PpoHyper hyper)
    : obs_dim_(obs_dim), hyper_(hyper) {
  Graph& g = graph_;
  const int B = hyper_.minibatch;
  const int obs = g.input("obs", B, obs_dim_);
  const int act = g.input("act", B, kActDim);
  const int old_logp = g.input("old_logp", B, 1);
  const int adv = g.input("adv", B, 1);
  const int ret = g.input("ret", B, 1);

  const int mu = build_actor(g, obs, obs_dim_);
  const int ls = build_logstd(g);
  const int inv_std = g.exp(g.scale(ls, -1.0));
  const int z = g.mul(g.sub(act, mu), inv_std);
  const int per_dim = g.add(g.scale(g.mul(z, z), -0.5),
                            g.add_const(g.scale(ls, -1.0), -0.5 * kLog2Pi));
  const int logp = g.row_sum(per_dim);
  ratio_ = g.exp(g.sub(logp, old_logp));
  const int lo = g.constant(Tensor::scalar(1.0 - hyper_.clip));
  const int hi = g.constant(Tensor::scalar(1.0 + hyper_.clip));
  const int clipped = g.min(g.max(ratio_, lo), hi);
  const int surr = g.min(g.mul(ratio_, adv), g.mul(clipped, adv));
  piloss_ = g.scale(g.mean_all(surr), -1.0);

  const int v = build_critic(g, obs, obs_dim_);
  const int dv = g.sub(v, ret);
  vloss_ = g.mean_all(g.mul(dv, dv));

  // diagonal-Gaussian entropy: sum(logstd) + D/2 * log(2*pi*e)
  const int ent = g.add_const(g.sum_all(ls), 0.5 * kActDim * (kLog2Pi + 1.0));
  loss_ = g.add(g.add(piloss_, g.scale(vloss_, hyper_.vf_coef)),
                g.scale(ent, -hyper_.ent_coef));
  exec_ = std::make_unique<Executor>(graph_);
}

PpoStats PpoUpdater::update(RolloutBatch& batch, ParamStore& params,
                            OptimState& opt, Rng& rng) {
  if (batch.n < hyper_.minibatch)
    throw Error("ppo_update: batch smaller than one minibatch");
  // normalize advantages to zero mean / unit variance over the whole batch
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= batch.n;
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / batch.n) + 1e-8;
  for (double& a : batch.advantages) a = (a - mean) / std;

  const ParamStore snapshot = params;
  const OptimState opt_snapshot = opt;
  PpoStats stats;
  int minibatches = 0;
  double clip_hits = 0.0;
  stats.mean_ratio = 0.0;

  std::vector<int> idx(batch.n);
  for (int i = 0; i < batch.n; ++i) idx[i] = i;
  const int B = hyper_.minibatch;

  Tensor obs_t({B, batch.obs_dim}), act_t({B, kActDim}), old_t({B, 1}),
      adv_t({B, 1}), ret_t({B, 1});
  try {
    for (int epoch = 0; epoch < hyper_.epochs; ++epoch) {
      for (int i = batch.n - 1; i > 0; --i)
        std::swap(idx[i], idx[rng.below(static_cast<uint64_t>(i) + 1)]);
      for (int start = 0; start + B <= batch.n; start += B) {
        for (int b = 0; b < B; ++b) {
          const int s = idx[start + b];
          std::copy_n(&batch.obs[static_cast<size_t>(s) * batch.obs_dim],
                      batch.obs_dim, &obs_t.data[static_cast<size_t>(b) * batch.obs_dim]);
          std::copy_n(&batch.actions[static_cast<size_t>(s) * kActDim], kActDim,
                      &act_t.data[static_cast<size_t>(b) * kActDim]);
          old_t.data[b] = batch.logprobs[s];
          adv_t.data[b] = batch.advantages[s];
          ret_t.data[b] = batch.returns[s];
        }
        ParamStore inputs;
        inputs["obs"] = obs_t;
        inputs["act"] = act_t;
        inputs["old_logp"] = old_t;
        inputs["adv"] = adv_t;
        inputs["ret"] = ret_t;
        exec_->forward(params, inputs);
        exec_->backward(loss_);
        ParamStore grads;
        exec_->param_grads(grads);
        adam_step(params, grads, opt, nullptr);

        const Tensor& r = exec_->value(ratio_);
        double rsum = 0.0;
        for (double v : r.data) {
          rsum += v;
          if (std::fabs(v - 1.0) > hyper_.clip) clip_hits += 1.0;
        }
        stats.mean_ratio += rsum / B;
        stats.value_loss += exec_->value(vloss_).data[0];
        stats.policy_loss += exec_->value(piloss_).data[0];
        ++minibatches;
      }
    }
  } catch (const Error&) {
    params = snapshot;
    opt = opt_snapshot;
    stats.rejected = true;
  }
  if (minibatches > 0) {
    stats.mean_ratio /= minibatches;
    stats.value_loss /= minibatches;
    stats.policy_loss /= minibatches;
    stats.clip_fraction = clip_hits / (static_cast<double>(minibatches) * B);
  }
  return stats;
}

namespace {

struct EpisodeRoll {
  std::vector<double> obs, actions, logprobs, rewards, values;
  double ret = 0.0;
  bool success = false;
  int steps = 0;
};

EpisodeRoll roll_episode(const TaskSpec& task, Policy& policy,
                         const ParamStore& params, RewardFn& reward,
                         Rng& env_rng, uint64_t& episode_seed,
                         int reward_stride) {
  EpisodeRoll ep;
  WorldState w;
  bool started = false;
  for (int tries = 0; tries < 20 && !started; ++tries) {
    w = reset(task, episode_seed++);
    try {
      reward.begin_episode(w, task);
      started = true;
    } catch (const Error&) {
      // degenerate goal for this seed; resample
    }
  }
  if (!started)
    throw Error("train_policy: could not find a non-degenerate episode seed");

  RewardStep last{};
  for (int t = 0; t < task.horizon; ++t) {
    const std::vector<double> o = obs_vector(task, w);
    ActResult a = policy.act(o, params, &env_rng);
    auto [next, ev] = step(w, a.action, task);
    w = next;
    if (t % reward_stride == 0 || t + 1 == task.horizon)
      last = reward.step(w, task);
    ep.obs.insert(ep.obs.end(), o.begin(), o.end());
    ep.actions.insert(ep.actions.end(), a.raw.begin(), a.raw.end());
    ep.logprobs.push_back(a.logprob);
    ep.values.push_back(a.value);
    ep.rewards.push_back(last.reward);
    ep.ret += last.reward;
    ++ep.steps;
  }
  ep.success = success(task, w);
  return ep;
}

}  // namespace

TrainPolicyResult train_policy(const TaskSpec& task, const RewardParams& rp,
                               const ParamStore* enc_params,
                               const EncoderConfig* enc_cfg,
                               const GoalSpec* goal,
                               const TrainPolicyConfig& cfg) {
  if (cfg.n_envs < 1) throw Error("train_policy: n_envs must be >= 1");
  const int D = obs_dim(task.id);
  Policy policy(D);

  TrainPolicyResult out;
  out.params = policy.init_params(cfg.seed);
  OptimState opt;
  opt.cfg.lr = cfg.hyper.lr;
  PpoUpdater updater(D, cfg.hyper);
  Rng update_rng(derive_seed(cfg.seed, "ppo-update"));

  std::vector<std::unique_ptr<RewardFn>> rewards;
  std::vector<Rng> env_rngs;
  std::vector<uint64_t> episode_seeds;
  for (int i = 0; i < cfg.n_envs; ++i) {
    rewards.push_back(make_reward(rp, enc_params, enc_cfg, goal));
    env_rngs.emplace_back(derive_seed(cfg.seed, "rollout:" + std::to_string(i)));
    episode_seeds.push_back(derive_seed(cfg.seed, "episodes:" + std::to_string(i)));
  }

  double best_key = -1e300;
  out.best_params = out.params;
  std::ofstream csv;
  if (!cfg.log_csv.empty()) {
    csv.open(cfg.log_csv);
    if (!csv) throw Error("train_policy: cannot write " + cfg.log_csv);
    csv << "iteration,mean_return,success_rate,mean_ratio,clip_fraction,"
           "value_loss\n";
  }

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    RolloutBatch batch;
    batch.obs_dim = D;
    double ret_sum = 0.0;
    int successes = 0;
    for (int i = 0; i < cfg.n_envs; ++i) {
      EpisodeRoll ep =
          roll_episode(task, policy, out.params, *rewards[i], env_rngs[i],
                       episode_seeds[i], cfg.reward_stride);
      if (ep.steps == 0) throw Error("train_policy: empty episode");
      std::vector<double> values = ep.values;
      values.push_back(0.0);  // terminal: bootstrap unused
      std::vector<uint8_t> terminal(ep.steps - 1, 0);
      terminal.push_back(1);
      GaeResult g = gae(ep.rewards, values, terminal, cfg.gamma, cfg.lambda);
      batch.obs.insert(batch.obs.end(), ep.obs.begin(), ep.obs.end());
      batch.actions.insert(batch.actions.end(), ep.actions.begin(),
                           ep.actions.end());
      batch.logprobs.insert(batch.logprobs.end(), ep.logprobs.begin(),
                            ep.logprobs.end());
      batch.rewards.insert(batch.rewards.end(), ep.rewards.begin(),
                           ep.rewards.end());
      batch.values.insert(batch.values.end(), ep.values.begin(),
                          ep.values.end());
      batch.terminal.insert(batch.terminal.end(), terminal.begin(),
                            terminal.end());
      batch.advantages.insert(batch.advantages.end(), g.advantages.begin(),
                              g.advantages.end());
      batch.returns.insert(batch.returns.end(), g.returns.begin(),
                           g.returns.end());
      batch.n += ep.steps;
      ret_sum += ep.ret;
      successes += ep.success ? 1 : 0;
    }
    PpoStats stats = updater.update(batch, out.params, opt, update_rng);

    IterationLog log;
    log.iteration = iter + 1;
    log.mean_return = ret_sum / cfg.n_envs;
    log.success_rate = static_cast<double>(successes) / cfg.n_envs;
    log.mean_ratio = stats.mean_ratio;
    log.clip_fraction = stats.clip_fraction;
    log.value_loss = stats.value_loss;
    out.log.push_back(log);
    if (csv.is_open())
      csv << log.iteration << "," << log.mean_return << "," << log.success_rate
          << "," << log.mean_ratio << "," << log.clip_fraction << ","
          << log.value_loss << "\n";

    const double key = log.success_rate * 1e6 + log.mean_return;
    if (key > best_key) {
      best_key = key;
      out.best_params = out.params;
    }
  }

  if (!cfg.checkpoint_dir.empty()) {
    nlohmann::json extra{{"reward_mode", reward_mode_name(rp.mode)},
                         {"iterations", cfg.iterations}};
    save_policy_checkpoint(cfg.checkpoint_dir + "/final.ckpt", out.params,
                           task.id, D, extra);
    save_policy_checkpoint(cfg.checkpoint_dir + "/best.ckpt", out.best_params,
                           task.id, D, extra);
  }
  return out;
}

}  // namespace tandem
