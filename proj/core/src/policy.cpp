#include "tandem/policy.hpp"

#include <cmath>

#include "tandem/checkpoint.hpp"

namespace tandem {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Each task also carries proxy-relative goal/grasp offsets, which make the
// mapping from observation to useful target positions nearly linear.
int task_feature_dim(TaskId task) {
  switch (task) {
    case TaskId::kReach: return 8;          // targets + offsets to them
    case TaskId::kPushBox: return 14;       // pose, velocity, target, offsets
    case TaskId::kCloseDoor: return 5;      // angles + handle offset
    case TaskId::kLiftTray: return 12;      // pose, velocity, height, offsets
    case TaskId::kPressButtons: return 10;  // centers, latches, offsets
    case TaskId::kStraightenRope: return 20;  // particles, targets, offsets
  }
  throw Error("task_feature_dim: bad task");
}

void push_vec(std::vector<double>& o, const Vec2& v) {
  o.push_back(v.x);
  o.push_back(v.y);
}

}  // namespace

int obs_dim(TaskId task) { return 8 + 2 + task_feature_dim(task) + 1; }

std::vector<double> obs_vector(const TaskSpec& task, const WorldState& w) {
  std::vector<double> o;
  o.reserve(obs_dim(task.id));
  for (const auto& p : w.proxies) {
    push_vec(o, p.position);
    push_vec(o, p.velocity);
  }
  for (const auto& p : w.proxies) o.push_back(p.attached ? 1.0 : 0.0);
  switch (task.id) {
    case TaskId::kReach:
      push_vec(o, w.target_a);
      push_vec(o, w.target_b);
      push_vec(o, w.target_a - w.proxies[0].position);
      push_vec(o, w.target_b - w.proxies[1].position);
      break;
    case TaskId::kPushBox: {
      const auto& box = w.objects[0];
      push_vec(o, box.position);
      push_vec(o, box.velocity);
      o.push_back(box.orientation);
      o.push_back(box.ang_velocity);
      push_vec(o, w.target_a);
      push_vec(o, box.site_world(0) - w.proxies[0].position);
      push_vec(o, box.site_world(1) - w.proxies[1].position);
      push_vec(o, w.target_a - box.position);
      break;
    }
    case TaskId::kCloseDoor: {
      const auto& door = w.objects[0];
      o.push_back(door.hinge_angle);
      o.push_back(door.hinge_vel);
      o.push_back(w.target_angle);
      push_vec(o, door.site_world(0) - w.proxies[1].position);
      break;
    }
    case TaskId::kLiftTray: {
      const auto& tray = w.objects[0];
      push_vec(o, tray.position);
      push_vec(o, tray.velocity);
      o.push_back(tray.orientation);
      o.push_back(tray.ang_velocity);
      o.push_back(w.target_height);
      push_vec(o, tray.site_world(0) - w.proxies[0].position);
      push_vec(o, tray.site_world(1) - w.proxies[1].position);
      o.push_back(w.target_height - tray.position.y);
      break;
    }
    case TaskId::kPressButtons: {
      for (const auto& b : w.objects) {
        push_vec(o, b.position);
        o.push_back(b.pressed_latch ? 1.0 : 0.0);
      }
      // offset to each proxy's nearest still-unlatched button (zero when done)
      for (const auto& proxy : w.proxies) {
        Vec2 off{0.0, 0.0};
        double best = 0.0;
        bool any = false;
        for (const auto& b : w.objects) {
          if (b.pressed_latch) continue;
          const double dist = (b.position - proxy.position).norm();
          if (!any || dist < best) best = dist, off = b.position - proxy.position, any = true;
        }
        push_vec(o, off);
      }
      break;
    }
    case TaskId::kStraightenRope: {
      const auto& rope = w.objects[0];
      const int n = static_cast<int>(rope.particles.size());
      for (int idx : {0, 2, 4, 7, 9, n - 1}) push_vec(o, rope.particles[idx]);
      push_vec(o, w.target_a);
      push_vec(o, w.target_b);
      push_vec(o, rope.particles.front() - w.proxies[0].position);
      push_vec(o, rope.particles.back() - w.proxies[1].position);
      break;
    }
  }
  o.push_back(static_cast<double>(w.t) / static_cast<double>(task.horizon));
  if (static_cast<int>(o.size()) != obs_dim(task.id))
    throw Error("obs_vector: feature length mismatch");
  for (double v : o)
    if (!std::isfinite(v)) throw Error("obs_vector: non-finite observation");
  return o;
}

Action action_from_raw(const std::array<double, kActDim>& raw) {
  std::array<double, 8> flat = raw;
  for (int i = 4; i < 8; ++i) flat[i] *= kForceGain;
  return Action::from_flat(flat);
}

std::array<double, kActDim> raw_from_action(const Action& a) {
  std::array<double, 8> flat = a.flat();
  for (int i = 4; i < 8; ++i) flat[i] /= kForceGain;
  return flat;
}

int build_actor(Graph& g, int obs_node, int obs_dim) {
  int h = g.tanh(g.linear(obs_node, "pi.l1", obs_dim, 128));
  h = g.tanh(g.linear(h, "pi.l2", 128, 128));
  return g.linear(h, "pi.mu", 128, kActDim);
}

int build_logstd(Graph& g) {
  const int raw = g.param("pi.logstd", 1, kActDim);
  const int lo = g.constant(Tensor::full({1, kActDim}, kLogStdMin));
  const int hi = g.constant(Tensor::full({1, kActDim}, kLogStdMax));
  return g.min(g.max(raw, lo), hi);
}

int build_critic(Graph& g, int obs_node, int obs_dim) {
  int h = g.tanh(g.linear(obs_node, "vf.l1", obs_dim, 128));
  h = g.tanh(g.linear(h, "vf.l2", 128, 128));
  return g.linear(h, "vf.out", 128, 1);
}

Policy::Policy(int obs_dim) : obs_dim_(obs_dim) {
  const int obs = graph_.input("obs", 1, obs_dim_);
  mu_node_ = build_actor(graph_, obs, obs_dim_);
  logstd_node_ = build_logstd(graph_);
  value_node_ = build_critic(graph_, obs, obs_dim_);
  exec_ = std::make_unique<Executor>(graph_);
}

ParamStore Policy::init_params(uint64_t seed) const {
  Rng rng(derive_seed(seed, "policy-init"));
  ParamStore p = graph_.init_params(rng);
  p["pi.logstd"] = Tensor::full({1, kActDim}, kLogStdInit);
  // small final layer + arena-center target bias: initial actions hover
  // near the middle of the workspace instead of a corner
  for (double& v : p["pi.mu.w"].data) v *= 0.1;
  Tensor& b = p["pi.mu.b"];
  for (int i = 0; i < 4; ++i) b.data[i] = 0.5;
  return p;
}

double Policy::log_density(const std::array<double, kActDim>& raw,
                           const std::array<double, kActDim>& mean,
                           const std::array<double, kActDim>& logstd) {
  double lp = 0.0;
  for (int i = 0; i < kActDim; ++i) {
    const double ls = clamp(logstd[i], kLogStdMin, kLogStdMax);
    const double z = (raw[i] - mean[i]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - 0.5 * kLog2Pi;
  }
  return lp;
}

ActResult Policy::act(const std::vector<double>& obs, const ParamStore& params,
                      Rng* rng) {
  if (static_cast<int>(obs.size()) != obs_dim_)
    throw Error("Policy::act: observation length mismatch");
  ParamStore inputs;
  Tensor t({1, obs_dim_});
  t.data = obs;
  inputs["obs"] = std::move(t);
  exec_->forward(params, inputs);

  ActResult out;
  std::array<double, kActDim> mean{}, logstd{};
  for (int i = 0; i < kActDim; ++i) {
    mean[i] = exec_->value(mu_node_).data[i];
    logstd[i] = exec_->value(logstd_node_).data[i];
  }
  out.value = exec_->value(value_node_).data[0];
  if (rng == nullptr) {
    out.raw = mean;
  } else {
    for (int i = 0; i < kActDim; ++i)
      out.raw[i] = mean[i] + std::exp(logstd[i]) * rng->normal();
  }
  out.logprob = log_density(out.raw, mean, logstd);
  out.action = action_from_raw(out.raw);
  if (!out.action.finite() || !std::isfinite(out.logprob) ||
      !std::isfinite(out.value))
    throw Error("Policy::act: non-finite network output");
  return out;
}

std::array<double, kActDim> Policy::mean_action(const std::vector<double>& obs,
                                                const ParamStore& params) {
  return act(obs, params, nullptr).raw;
}

void save_policy_checkpoint(const std::string& path, const ParamStore& params,
                            TaskId task, int obs_dim,
                            const nlohmann::json& extra_meta) {
  nlohmann::json meta{{"kind", "policy"},
                      {"task", task_name(task)},
                      {"obs_dim", obs_dim}};
  if (extra_meta.is_object())
    for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  save_checkpoint(path, params, meta);
}

PolicyCheckpoint load_policy_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "policy")
    throw Error("load_policy_checkpoint: not a policy checkpoint: " + path);
  PolicyCheckpoint out;
  out.task = task_from_name(ck.meta.at("task").get<std::string>());
  out.obs_dim = ck.meta.at("obs_dim").get<int>();
  out.params = std::move(ck.params);
  out.meta = std::move(ck.meta);
  return out;
}

}  // namespace tandem
