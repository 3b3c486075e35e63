#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tandem/clips.hpp"
#include "tandem/encoder.hpp"
#include "tandem/rng.hpp"
#include "tandem/tasks.hpp"

using namespace tandem;

namespace {
const TaskCatalog& task_catalog() {
  static TaskCatalog c = TaskCatalog::builtin();
  return c;
}
}  // namespace
namespace fs = std::filesystem;

namespace {

constexpr double kLn3 = 1.0986122886681098;

// push-box clips: the box sweeps across the frame, so the agent-agnostic
// pixels carry a real temporal signal (reach scenes are static once the
// proxies are painted out)
const ClipDataset& small_dataset() {
  static ClipDataset ds = [] {
    const TaskSpec& task = task_catalog().get(TaskId::kPushBox);
    ClipDataset d;
    for (uint64_t s = 0; s < 4; ++s)
      for (int v = 0; v < 2; ++v)
        d.clips.push_back(episode_to_clip(task, s, ViewSpec::by_id(v), 3));
    return d;
  }();
  return ds;
}

Observation sample_obs(uint64_t seed) {
  const TaskSpec& task = task_catalog().get(TaskId::kPushBox);
  return render(reset(task, seed), ViewSpec::by_id(0),
                RenderMode::kAgentAgnostic);
}

}  // namespace

TEST_CASE("similarity fixtures") {
  Embedding a{{1.0, 2.0, 3.0}};
  CHECK(similarity(a, a, 1.0) == 1.0);

  Embedding b{{0.0, 0.0}}, c{{1.0, 0.0}};
  CHECK(similarity(b, c, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Embedding x{{rng.normal(), rng.normal(), rng.normal()}};
    Embedding y{{rng.normal(), rng.normal(), rng.normal()}};
    double s = similarity(x, y, 1.0);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    CHECK(s == similarity(y, x, 1.0));
  }
}

TEST_CASE("tcn loss fixtures") {
  CHECK(std::fabs(tcn_loss(0.7, 0.7, 0.7) - kLn3) <= 1e-9);
  const double expect = std::log((std::exp(1.0) + 2.0) / std::exp(1.0));
  CHECK(std::fabs(tcn_loss(1.0, 0.0, 0.0) - expect) <= 1e-9);
  CHECK(std::fabs(expect - 0.551444713932051) <= 1e-12);

  // strictly decreasing in the positive similarity
  double prev = tcn_loss(0.0, 0.4, 0.6);
  for (double s = 0.05; s <= 1.0; s += 0.05) {
    double cur = tcn_loss(s, 0.4, 0.6);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("reg loss fixtures") {
  CHECK(reg_loss(Embedding{{0.0, 0.0}}) == 0.0);
  CHECK(reg_loss(Embedding{{3.0, 4.0}}) == doctest::Approx(12.0).epsilon(1e-12));
  Embedding z{{1.5, -2.5, 0.25}};
  Embedding nz{{-1.5, 2.5, -0.25}};
  CHECK(reg_loss(z) == reg_loss(nz));
}

TEST_CASE("encode is deterministic and hand-ablation ignores hands") {
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(1);
  Observation obs = sample_obs(0);

  Embedding z1 = enc.encode(obs.frame, obs.hands, p);
  Embedding z2 = enc.encode(obs.frame, obs.hands, p);
  CHECK(z1.z == z2.z);
  REQUIRE(static_cast<int>(z1.z.size()) == cfg.embed_dim);

  EncoderConfig abl = cfg;
  abl.ablate_hands = true;
  Encoder enc_abl(abl);
  ParamStore pa = enc_abl.init_params(1);
  HandCoords moved = obs.hands;
  moved.left.x = std::fmod(moved.left.x + 0.3, 1.0);
  CHECK(enc_abl.encode(obs.frame, obs.hands, pa).z ==
        enc_abl.encode(obs.frame, moved, pa).z);
}

TEST_CASE("full encoder is sensitive to hand coordinates") {
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(2);
  Observation obs = sample_obs(1);
  REQUIRE(obs.hands.left_present);
  Embedding base = enc.encode(obs.frame, obs.hands, p);

  Rng rng(8);
  int changed = 0;
  for (int i = 0; i < 100; ++i) {
    HandCoords h = obs.hands;
    double angle = rng.uniform(0.0, 2.0 * 3.14159265358979);
    h.left.x = clamp(h.left.x + 0.25 * std::cos(angle), 0.0, 1.0);
    h.left.y = clamp(h.left.y + 0.25 * std::sin(angle), 0.0, 1.0);
    Embedding z = enc.encode(obs.frame, h, p);
    double d = 0.0;
    for (size_t k = 0; k < z.z.size(); ++k) d += (z.z[k] - base.z[k]) * (z.z[k] - base.z[k]);
    if (std::sqrt(d) > 0.0) ++changed;
  }
  CHECK(changed >= 99);
}

TEST_CASE("absent hands fall back to the learned absent tokens") {
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(3);
  Observation obs = sample_obs(2);
  HandCoords absent;
  absent.left_present = absent.right_present = false;
  HandCoords garbage = absent;
  garbage.left = {0.123, 0.456};
  garbage.right = {0.9, 0.9};
  CHECK(enc.encode(obs.frame, absent, p).z ==
        enc.encode(obs.frame, garbage, p).z);
}

TEST_CASE("quadruplet sampling respects the windows") {
  Rng rng(17);
  const ClipDataset& ds = small_dataset();
  for (int i = 0; i < 500; ++i) {
    Quadruplet q = sample_quadruplet(ds, rng, 3, 10);
    const Clip& clip = ds.clips[q.clip];
    int dp = std::abs(q.anchor - q.positive);
    int dn = std::abs(q.anchor - q.negative);
    REQUIRE(dp >= 1);
    REQUIRE(dp <= 3);
    REQUIRE(dn >= 10);
    REQUIRE(q.other_clip != q.clip);
    REQUIRE(ds.clips[q.other_clip].view_id == clip.view_id);
    REQUIRE(q.other_frame < ds.clips[q.other_clip].length());
  }
}

TEST_CASE("random encoder batch mean tcn loss is about ln 3") {
  EncoderConfig cfg;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(5);
  Rng rng(23);
  const ClipDataset& ds = small_dataset();
  double total = 0.0;
  const int batch = 64;
  for (int i = 0; i < batch; ++i) {
    Quadruplet q = sample_quadruplet(ds, rng, 3, 10);
    const Clip& c = ds.clips[q.clip];
    const Clip& o = ds.clips[q.other_clip];
    Embedding za = enc.encode(c.frames[q.anchor], c.hands[q.anchor], p);
    Embedding zp = enc.encode(c.frames[q.positive], c.hands[q.positive], p);
    Embedding zn = enc.encode(c.frames[q.negative], c.hands[q.negative], p);
    Embedding zo = enc.encode(o.frames[q.other_frame], o.hands[q.other_frame], p);
    total += tcn_loss(similarity(za, zp, cfg.temperature),
                      similarity(za, zn, cfg.temperature),
                      similarity(za, zo, cfg.temperature));
  }
  // at random init nearby frames already look alike, so the mean sits a
  // little below the uninformative value rather than exactly on it
  CHECK(std::fabs(total / batch - kLn3) <= 0.15);
}

TEST_CASE("short training run beats the uninformative baseline") {
  EncoderConfig cfg;
  EncoderTrainConfig tc;
  tc.stage = 1;
  tc.steps = 200;
  tc.batch_size = 8;
  tc.lr = 3e-4;
  tc.eval_every = 100;
  tc.seed = 1;
  EncoderTrainResult r = train_encoder(small_dataset(), {}, cfg, tc);
  CHECK(r.final_train_tcn < kLn3);
  REQUIRE(r.train_loss.size() == 200);

  // determinism: same config, same curve
  EncoderTrainResult r2 = train_encoder(small_dataset(), {}, cfg, tc);
  CHECK(r.train_loss == r2.train_loss);
  for (const auto& [name, t] : r.params) CHECK(t.data == r2.params.at(name).data);
}

TEST_CASE("stage one leaves hand parameters untouched") {
  EncoderConfig cfg;
  EncoderTrainConfig tc;
  tc.stage = 1;
  tc.steps = 20;
  tc.batch_size = 4;
  tc.seed = 2;
  Encoder enc(cfg);
  ParamStore init = enc.init_params(tc.seed);
  EncoderTrainResult r = train_encoder(small_dataset(), {}, cfg, tc);
  for (const auto& [name, t] : r.params) {
    if (name.rfind("hand.", 0) == 0)
      CHECK(t.data == init.at(name).data);
  }
  bool visual_moved = false;
  for (const auto& [name, t] : r.params)
    if (name.rfind("hand.", 0) != 0 && t.data != init.at(name).data)
      visual_moved = true;
  CHECK(visual_moved);
}

TEST_CASE("embeddings do not collapse after a short run") {
  EncoderConfig cfg;
  EncoderTrainConfig tc;
  tc.stage = 1;
  tc.steps = 100;
  tc.batch_size = 8;
  tc.seed = 4;
  EncoderTrainResult r = train_encoder(small_dataset(), {}, cfg, tc);
  Encoder enc(cfg);
  const ClipDataset& ds = small_dataset();
  std::vector<Embedding> zs;
  Rng rng(31);
  for (int i = 0; i < 30; ++i) {
    const Clip& c = ds.clips[rng.below(ds.clips.size())];
    int f = static_cast<int>(rng.below(c.length()));
    zs.push_back(enc.encode(c.frames[f], c.hands[f], r.params));
  }
  double total = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < zs.size(); ++i)
    for (size_t j = i + 1; j < zs.size(); ++j) {
      double d = 0.0;
      for (size_t k = 0; k < zs[i].z.size(); ++k)
        d += (zs[i].z[k] - zs[j].z[k]) * (zs[i].z[k] - zs[j].z[k]);
      total += std::sqrt(d);
      ++pairs;
    }
  CHECK(total / pairs > 1e-3);
}

TEST_CASE("checkpoint round trip preserves config and params at f32 precision") {
  EncoderConfig cfg;
  cfg.ablate_hands = true;
  Encoder enc(cfg);
  ParamStore p = enc.init_params(9);
  fs::path path = fs::temp_directory_path() / "tandem_enc_rt.ckpt";
  save_encoder_checkpoint(path.string(), p, cfg);
  auto [lp, lcfg] = load_encoder_checkpoint(path.string());
  CHECK(lcfg.ablate_hands == true);
  CHECK(lcfg.embed_dim == cfg.embed_dim);
  REQUIRE(lp.size() == p.size());
  for (const auto& [name, t] : p) {
    const Tensor& lt = lp.at(name);
    REQUIRE(lt.shape == t.shape);
    for (size_t i = 0; i < t.data.size(); ++i)
      CHECK(lt.data[i] == doctest::Approx(t.data[i]).epsilon(1e-6));
  }
}
