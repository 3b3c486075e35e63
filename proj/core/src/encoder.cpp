#include "tandem/encoder.hpp"

#include <cmath>
#include <fstream>

#include "tandem/checkpoint.hpp"

namespace tandem {

using nlohmann::json;

json EncoderConfig::to_json() const {
  return json{{"frame_size", frame_size},   {"patch_size", patch_size},
              {"token_dim", token_dim},     {"depth", depth},
              {"heads", heads},             {"embed_dim", embed_dim},
              {"mlp_ratio", mlp_ratio},     {"hand_hidden", hand_hidden},
              {"temperature", temperature}, {"ablate_hands", ablate_hands}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  c.frame_size = j.at("frame_size").get<int>();
  c.patch_size = j.at("patch_size").get<int>();
  c.token_dim = j.at("token_dim").get<int>();
  c.depth = j.at("depth").get<int>();
  c.heads = j.at("heads").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<int>();
  c.hand_hidden = j.at("hand_hidden").get<std::vector<int>>();
  c.temperature = j.at("temperature").get<double>();
  c.ablate_hands = j.at("ablate_hands").get<bool>();
  if (c.frame_size % c.patch_size != 0)
    throw Error("EncoderConfig: patch_size must divide frame_size");
  if (c.token_dim % c.heads != 0)
    throw Error("EncoderConfig: heads must divide token_dim");
  if (c.temperature <= 0.0)
    throw Error("EncoderConfig: temperature must be positive");
  return c;
}

double similarity(const Embedding& z1, const Embedding& z2, double tau) {
  if (z1.z.size() != z2.z.size())
    throw Error("similarity: embedding size mismatch");
  if (tau <= 0.0) throw Error("similarity: tau must be positive");
  double sq = 0.0;
  for (size_t i = 0; i < z1.z.size(); ++i) {
    const double d = z1.z[i] - z2.z[i];
    sq += d * d;
  }
  return std::exp(-std::sqrt(sq) / tau);
}

double tcn_loss(double s_ij, double s_ik, double s_il) {
  const double m = std::max(s_ij, std::max(s_ik, s_il));
  const double lse = m + std::log(std::exp(s_ij - m) + std::exp(s_ik - m) +
                                  std::exp(s_il - m));
  return lse - s_ij;
}

double reg_loss(const Embedding& z) {
  double l1 = 0.0, sq = 0.0;
  for (double v : z.z) {
    l1 += std::fabs(v);
    sq += v * v;
  }
  return l1 + std::sqrt(sq);
}

Tensor frame_to_patches(const Frame& frame, const EncoderConfig& cfg) {
  if (frame.h != cfg.frame_size || frame.w != cfg.frame_size)
    throw Error("frame_to_patches: frame size mismatch");
  const int ps = cfg.patch_size;
  const int side = cfg.patches_per_side();
  Tensor out({cfg.num_patches(), cfg.patch_dim()});
  for (int pr = 0; pr < side; ++pr)
    for (int pc = 0; pc < side; ++pc) {
      const int p = pr * side + pc;
      int idx = 0;
      for (int dy = 0; dy < ps; ++dy)
        for (int dx = 0; dx < ps; ++dx) {
          const float* px = frame.px(pr * ps + dy, pc * ps + dx);
          for (int ch = 0; ch < 3; ++ch) out.at(p, idx++) = px[ch];
        }
    }
  return out;
}

namespace {

// Hand MLP shared between sides; per-side learned absent token.
int hand_token(Graph& g, const EncoderConfig& cfg, const std::string& prefix,
               const char* side) {
  const int d = cfg.token_dim;
  const int h1 = cfg.hand_hidden.at(0), h2 = cfg.hand_hidden.at(1);
  const int coords = g.input(prefix + "hand_" + side, 1, 2);
  const int flag = g.input(prefix + "flag_" + side, 1, 1);
  int h = g.relu(g.linear(coords, "hand.f1", 2, h1));
  h = g.relu(g.linear(h, "hand.f2", h1, h2));
  h = g.linear(h, "hand.f3", h2, d);
  const int absent = g.param(std::string("hand.absent_") + side, 1, d);
  const int not_flag = g.add_const(g.scale(flag, -1.0), 1.0);
  return g.add(g.mul(h, flag), g.mul(absent, not_flag));
}

int sim_node(Graph& g, int za, int zb, double tau) {
  const int d = g.sub(za, zb);
  // tiny floor keeps d(sqrt)/dx finite when the embeddings coincide
  const int sq = g.add_const(g.sum_all(g.mul(d, d)), 1e-12);
  return g.exp(g.scale(g.sqrt(sq), -1.0 / tau));
}

int reg_node(Graph& g, int z) {
  const int l1 = g.sum_all(g.abs(z));
  const int l2 = g.sqrt(g.add_const(g.sum_all(g.mul(z, z)), 1e-12));
  return g.add(l1, l2);
}

}  // namespace

int build_encode_graph(Graph& g, const EncoderConfig& cfg,
                       const std::string& prefix) {
  const int d = cfg.token_dim;
  const int np = cfg.num_patches();
  const int hd = d / cfg.heads;
  const int full_seq = 1 + np + 2;  // pos table always holds the hand slots

  const int patches = g.input(prefix + "patches", np, cfg.patch_dim());
  const int pt = g.linear(patches, "embed", cfg.patch_dim(), d);
  std::vector<int> tokens{g.param("readout", 1, d), pt};
  if (!cfg.ablate_hands) {
    tokens.push_back(hand_token(g, cfg, prefix, "l"));
    tokens.push_back(hand_token(g, cfg, prefix, "r"));
  }
  const int pos = g.param("pos", full_seq, d);
  int x = g.add(g.concat_rows(tokens), g.slice_rows(pos, 0, cfg.seq_len()));

  for (int l = 0; l < cfg.depth; ++l) {
    const std::string tp = "t" + std::to_string(l) + ".";
    const int h = g.layernorm(x);
    const int q = g.linear(h, tp + "q", d, d);
    const int k = g.linear(h, tp + "k", d, d);
    const int v = g.linear(h, tp + "v", d, d);
    std::vector<int> heads_out;
    for (int i = 0; i < cfg.heads; ++i) {
      const int qs = g.slice_cols(q, i * hd, (i + 1) * hd);
      const int ks = g.slice_cols(k, i * hd, (i + 1) * hd);
      const int vs = g.slice_cols(v, i * hd, (i + 1) * hd);
      const int attn = g.softmax(
          g.scale(g.matmul(qs, ks, false, true), 1.0 / std::sqrt(double(hd))));
      heads_out.push_back(g.matmul(attn, vs));
    }
    const int att = g.linear(g.concat_cols(heads_out), tp + "o", d, d);
    x = g.add(x, att);
    const int h2 = g.layernorm(x);
    const int m = g.linear(g.relu(g.linear(h2, tp + "f1", d, d * cfg.mlp_ratio)),
                           tp + "f2", d * cfg.mlp_ratio, d);
    x = g.add(x, m);
  }
  const int readout = g.layernorm(g.slice_rows(x, 0, 1));
  return g.linear(readout, "out", d, cfg.embed_dim);
}

void bind_observation(ParamStore& inputs, const std::string& prefix,
                      const Frame& frame, const HandCoords& hands,
                      const EncoderConfig& cfg) {
  inputs[prefix + "patches"] = frame_to_patches(frame, cfg);
  if (cfg.ablate_hands) return;
  auto centered = [](const Vec2& p, bool present) {
    return present ? Tensor::row({(p.x - 0.5) * 2.0, (p.y - 0.5) * 2.0})
                   : Tensor::row({0.0, 0.0});
  };
  inputs[prefix + "hand_l"] = centered(hands.left, hands.left_present);
  inputs[prefix + "hand_r"] = centered(hands.right, hands.right_present);
  inputs[prefix + "flag_l"] = Tensor::scalar(hands.left_present ? 1.0 : 0.0);
  inputs[prefix + "flag_r"] = Tensor::scalar(hands.right_present ? 1.0 : 0.0);
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(cfg) {
  z_node_ = build_encode_graph(graph_, cfg_, "");
  exec_ = std::make_unique<Executor>(graph_);
}

Embedding Encoder::encode(const Frame& frame, const HandCoords& hands,
                          const ParamStore& params) {
  ParamStore inputs;
  bind_observation(inputs, "", frame, hands, cfg_);
  exec_->forward(params, inputs);
  const Tensor& z = exec_->value(z_node_);
  return Embedding{z.data};
}

ParamStore Encoder::init_params(uint64_t seed) const {
  Rng rng(derive_seed(seed, "encoder-init"));
  ParamStore p = graph_.init_params(rng);
  // absent tokens start at zero so stage 1 sees clean hand-free slots
  for (const char* name : {"hand.absent_l", "hand.absent_r"}) {
    auto it = p.find(name);
    if (it != p.end()) std::fill(it->second.data.begin(), it->second.data.end(), 0.0);
  }
  return p;
}

Quadruplet sample_quadruplet(const ClipDataset& dataset, Rng& rng, int w_pos,
                             int w_neg) {
  const int nclips = static_cast<int>(dataset.clips.size());
  if (nclips < 2) throw Error("sample_quadruplet: need at least two clips");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int c = static_cast<int>(rng.below(nclips));
    const Clip& clip = dataset.clips[c];
    const int n = clip.length();
    if (n <= w_neg) continue;
    const int i = static_cast<int>(rng.below(n));
    const int lo = std::max(0, i - w_pos), hi = std::min(n - 1, i + w_pos);
    const int pos_count = hi - lo;  // excludes i itself
    if (pos_count <= 0) continue;
    int j = lo + static_cast<int>(rng.below(pos_count));
    if (j >= i) ++j;
    const int left = std::max(0, i - w_neg + 1);
    const int right = std::max(0, n - (i + w_neg));
    if (left + right == 0) continue;
    int k = static_cast<int>(rng.below(left + right));
    k = k < left ? k : i + w_neg + (k - left);
    std::vector<int> peers;
    for (int o = 0; o < nclips; ++o)
      if (o != c && dataset.clips[o].view_id == clip.view_id) peers.push_back(o);
    if (peers.empty()) continue;
    const int oc = peers[rng.below(peers.size())];
    const int of = static_cast<int>(rng.below(dataset.clips[oc].length()));
    return Quadruplet{c, i, j, k, oc, of};
  }
  throw Error(
      "sample_quadruplet: no valid quadruplet (clips too short or a view with "
      "a single clip)");
}

namespace {

struct TrainGraph {
  Graph g;
  int loss = -1;
  int tcn = -1;

  TrainGraph(const EncoderConfig& cfg, double lambda_reg) {
    const int za = build_encode_graph(g, cfg, "a.");
    const int zp = build_encode_graph(g, cfg, "p.");
    const int zn = build_encode_graph(g, cfg, "n.");
    const int zo = build_encode_graph(g, cfg, "o.");
    const int s_ap = sim_node(g, za, zp, cfg.temperature);
    const int s_an = sim_node(g, za, zn, cfg.temperature);
    const int s_ao = sim_node(g, za, zo, cfg.temperature);
    const int total = g.add(g.add(g.exp(s_ap), g.exp(s_an)), g.exp(s_ao));
    tcn = g.sub(g.log(total), s_ap);
    const int reg =
        g.scale(g.add(g.add(reg_node(g, za), reg_node(g, zp)),
                      g.add(reg_node(g, zn), reg_node(g, zo))),
                0.25);
    loss = g.add(tcn, g.scale(reg, lambda_reg));
  }
};

void bind_quadruplet(ParamStore& inputs, const ClipDataset& ds,
                     const Quadruplet& q, const EncoderConfig& cfg,
                     bool force_absent) {
  const Clip& c = ds.clips[q.clip];
  const Clip& oc = ds.clips[q.other_clip];
  const HandCoords none{};
  auto h = [&](const HandCoords& src) { return force_absent ? none : src; };
  bind_observation(inputs, "a.", c.frames[q.anchor], h(c.hands[q.anchor]), cfg);
  bind_observation(inputs, "p.", c.frames[q.positive], h(c.hands[q.positive]),
                   cfg);
  bind_observation(inputs, "n.", c.frames[q.negative], h(c.hands[q.negative]),
                   cfg);
  bind_observation(inputs, "o.", oc.frames[q.other_frame],
                   h(oc.hands[q.other_frame]), cfg);
}

bool is_hand_param(const std::string& name) {
  return name.rfind("hand.", 0) == 0;
}

}  // namespace

EncoderTrainResult train_encoder(const ClipDataset& train,
                                 const ClipDataset& heldout,
                                 const EncoderConfig& cfg,
                                 const EncoderTrainConfig& tc,
                                 const ParamStore* init) {
  if (tc.stage != 1 && tc.stage != 2)
    throw Error("train_encoder: stage must be 1 or 2");
  if (tc.stage == 2 && init == nullptr)
    throw Error("train_encoder: stage 2 requires a stage-1 checkpoint");
  if (cfg.ablate_hands && tc.stage == 2)
    throw Error("train_encoder: hand-ablated encoders have no stage 2");

  TrainGraph tg(cfg, tc.lambda_reg);
  Executor exec(tg.g);

  EncoderTrainResult out;
  if (init) {
    out.params = *init;
  } else {
    Rng rng(derive_seed(tc.seed, "encoder-init"));
    out.params = tg.g.init_params(rng);
    for (const char* name : {"hand.absent_l", "hand.absent_r"}) {
      auto it = out.params.find(name);
      if (it != out.params.end())
        std::fill(it->second.data.begin(), it->second.data.end(), 0.0);
    }
  }

  OptimState opt;
  opt.cfg.lr = tc.lr;
  std::map<std::string, double> lr_scale;
  if (tc.stage == 2)
    for (const auto& name : tg.g.param_names())
      lr_scale[name] = is_hand_param(name) ? 1.0 : tc.stage2_lr_scale;

  // Hand inputs are dropped in stage 1 (agent-agnostic pixels only); in the
  // ablated variant the graph has no hand inputs at all.
  const bool force_absent = tc.stage == 1;

  Rng sample_rng(derive_seed(tc.seed, "encoder-batches"));
  std::vector<Quadruplet> eval_set;
  if (!heldout.clips.empty()) {
    Rng eval_rng(derive_seed(tc.seed, "encoder-heldout"));
    try {
      for (int i = 0; i < tc.eval_quadruplets; ++i)
        eval_set.push_back(
            sample_quadruplet(heldout, eval_rng, tc.w_pos, tc.w_neg));
    } catch (const Error&) {
      // held-out split too thin for quadruplets; train without the curve
      eval_set.clear();
    }
  }

  auto eval_heldout = [&]() {
    double sum = 0.0;
    for (const auto& q : eval_set) {
      ParamStore inputs;
      bind_quadruplet(inputs, heldout, q, cfg, force_absent);
      exec.forward(out.params, inputs);
      sum += exec.value(tg.tcn).data[0];
    }
    return sum / static_cast<double>(eval_set.size());
  };

  for (int step = 0; step < tc.steps; ++step) {
    ParamStore grads;
    double loss_sum = 0.0, tcn_sum = 0.0;
    try {
      for (int b = 0; b < tc.batch_size; ++b) {
        const Quadruplet q =
            sample_quadruplet(train, sample_rng, tc.w_pos, tc.w_neg);
        ParamStore inputs;
        bind_quadruplet(inputs, train, q, cfg, force_absent);
        exec.forward(out.params, inputs);
        exec.backward(tg.loss);
        exec.param_grads(grads);
        loss_sum += exec.value(tg.loss).data[0];
        tcn_sum += exec.value(tg.tcn).data[0];
      }
    } catch (const Error& e) {
      throw Error("train_encoder: diverged at step " + std::to_string(step) +
                  ": " + e.what());
    }
    const double inv = 1.0 / tc.batch_size;
    for (auto& [name, g] : grads)
      for (double& v : g.data) v *= inv;
    if (tc.stage == 1)
      for (auto it = grads.begin(); it != grads.end();)
        it = is_hand_param(it->first) ? grads.erase(it) : std::next(it);
    adam_step(out.params, grads, opt, lr_scale.empty() ? nullptr : &lr_scale);

    out.train_loss.push_back(loss_sum * inv);
    out.train_tcn.push_back(tcn_sum * inv);
    if (!std::isfinite(out.train_loss.back()))
      throw Error("train_encoder: diverged at step " + std::to_string(step));
    if (!eval_set.empty() &&
        ((step + 1) % tc.eval_every == 0 || step + 1 == tc.steps))
      out.heldout_tcn.emplace_back(step + 1, eval_heldout());
  }

  const int tail = std::min<int>(10, static_cast<int>(out.train_tcn.size()));
  double s = 0.0;
  for (int i = 0; i < tail; ++i)
    s += out.train_tcn[out.train_tcn.size() - 1 - i];
  out.final_train_tcn = tail > 0 ? s / tail : 0.0;
  return out;
}

void save_encoder_checkpoint(const std::string& path, const ParamStore& params,
                             const EncoderConfig& cfg) {
  save_checkpoint(path, params,
                  json{{"kind", "encoder"}, {"config", cfg.to_json()}});
}

std::pair<ParamStore, EncoderConfig> load_encoder_checkpoint(
    const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.meta.value("kind", "") != "encoder")
    throw Error("load_encoder_checkpoint: not an encoder checkpoint: " + path);
  return {std::move(ck.params), EncoderConfig::from_json(ck.meta.at("config"))};
}

void write_loss_curve_csv(const std::string& path,
                          const EncoderTrainResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("write_loss_curve_csv: cannot write " + path);
  std::map<int, double> heldout(result.heldout_tcn.begin(),
                                result.heldout_tcn.end());
  out << "step,train_loss,train_tcn,heldout_tcn\n";
  for (size_t i = 0; i < result.train_loss.size(); ++i) {
    out << (i + 1) << "," << result.train_loss[i] << "," << result.train_tcn[i]
        << ",";
    auto it = heldout.find(static_cast<int>(i + 1));
    if (it != heldout.end()) out << it->second;
    out << "\n";
  }
}

}  // namespace tandem
