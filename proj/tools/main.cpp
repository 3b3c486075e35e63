// tandem: desk-scale bimanual skill pipeline.
//
// Subcommands cover the full loop: demonstration clip generation, goal
// specification, two-stage encoder training, encoder evaluation, PPO skill
// training under several reward modes, seed x view evaluation, reward-mode
// comparison tables, demo collection, behavior cloning, and report plots.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tandem/bc.hpp"
#include "tandem/clips.hpp"
#include "tandem/encoder.hpp"
#include "tandem/evaluate.hpp"
#include "tandem/manifest.hpp"
#include "tandem/ppo.hpp"

namespace {

using namespace tandem;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<std::string> dir_files(const std::string& dir) {
  std::vector<std::string> out;
  if (dir.empty() || !fs::exists(dir)) return out;
  if (!fs::is_directory(dir)) return {dir};
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> existing(std::initializer_list<std::string> paths) {
  std::vector<std::string> out;
  for (const auto& p : paths)
    if (!p.empty() && fs::exists(p)) out.push_back(p);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// subcommand implementations (each takes a fully resolved RunConfig)

int cmd_gen_demos(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  const int n = c.n > 0 ? c.n : 20;
  generate_clips(task, n, derive_seed(c.seed, "datagen"), c.views, c.stride,
                 c.out_dir);
  write_manifest(c.out_dir, c, {});
  std::cout << "wrote " << n << " clips to " << c.out_dir << "\n";
  return kExitOk;
}

int cmd_make_goal(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  const int view = c.views.empty() ? 0 : c.views.front();
  GoalSpec goal =
      make_goal(task, derive_seed(c.seed, "goal"), ViewSpec::by_id(view));
  save_goal(goal, c.out_dir);
  write_manifest(c.out_dir, c, {});
  std::cout << "goal written to " << c.out_dir << "\n";
  return kExitOk;
}

int cmd_train_encoder(const RunConfig& c) {
  ClipDataset train = ClipDataset::load_split(c.clips_dir, false);
  ClipDataset heldout = ClipDataset::load_split(c.clips_dir, true);
  if (heldout.clips.empty()) heldout = train;  // tiny corpora: reuse

  EncoderConfig cfg;
  cfg.ablate_hands = c.ablate_hands;
  EncoderTrainConfig tc;
  tc.stage = c.stage;
  tc.seed = c.seed;
  if (c.steps > 0) tc.steps = c.steps;
  if (c.batch_size > 0) tc.batch_size = c.batch_size;
  if (c.lr > 0.0) tc.lr = c.lr;

  ParamStore init;
  const ParamStore* init_ptr = nullptr;
  if (c.stage == 2) {
    auto [params, prev_cfg] = load_encoder_checkpoint(c.init_checkpoint);
    cfg = prev_cfg;
    init = std::move(params);
    init_ptr = &init;
  }

  EncoderTrainResult result = train_encoder(train, heldout, cfg, tc, init_ptr);
  fs::create_directories(c.out_dir);
  save_encoder_checkpoint(c.out_dir + "/encoder.ckpt", result.params, cfg);
  write_loss_curve_csv(c.out_dir + "/loss_curve.csv", result);
  write_manifest(c.out_dir, c, existing({c.init_checkpoint}));
  std::cout << "final train tcn loss " << result.final_train_tcn << "\n";
  return kExitOk;
}

int cmd_eval_encoder(const RunConfig& c) {
  auto [params, cfg] = load_encoder_checkpoint(c.encoder_checkpoint);
  ClipDataset heldout = ClipDataset::load_split(c.clips_dir, true);
  if (heldout.clips.empty())
    throw Error("eval-encoder: no held-out clips under " + c.clips_dir);

  Encoder encoder(cfg);
  std::vector<std::vector<std::string>> rows;
  double sum = 0.0;
  int count = 0;
  for (size_t ci = 0; ci < heldout.clips.size(); ++ci) {
    const Clip& clip = heldout.clips[ci];
    const Embedding z_goal =
        encoder.encode(clip.frames.back(), clip.hands.back(), params);
    std::vector<double> sims;
    for (int t = 0; t < clip.length(); ++t)
      sims.push_back(similarity(
          encoder.encode(clip.frames[t], clip.hands[t], params), z_goal,
          cfg.temperature));
    double rho;
    try {
      rho = progress_consistency(sims);
    } catch (const Error&) {
      continue;  // constant similarity; skip this clip
    }
    sum += rho;
    ++count;
    rows.push_back({std::to_string(ci), task_name(clip.task),
                    std::to_string(clip.seed), fmt(rho)});
  }
  if (count == 0) throw Error("eval-encoder: no clip produced a defined rho");
  fs::create_directories(c.out_dir);
  write_csv(c.out_dir + "/progress_consistency.csv",
            {"clip", "task", "seed", "rho"}, rows);
  write_manifest(c.out_dir, c, existing({c.encoder_checkpoint}));
  std::cout << "mean held-out rho " << (sum / count) << " over " << count
            << " clips\n";
  return kExitOk;
}

int cmd_train_policy(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  RewardParams rp;
  rp.mode = reward_mode_from_name(c.reward_mode);

  ParamStore enc_params;
  EncoderConfig enc_cfg;
  GoalSpec goal;
  const bool needs_encoder = rp.mode != RewardMode::kExpert;
  if (needs_encoder) {
    std::tie(enc_params, enc_cfg) = load_encoder_checkpoint(c.encoder_checkpoint);
    goal = load_goal(c.goal_dir);
  }

  TrainPolicyConfig tc;
  tc.n_envs = c.n_envs;
  tc.iterations = c.iterations;
  tc.reward_stride = c.reward_stride;
  tc.seed = c.seed;
  fs::create_directories(c.out_dir);
  tc.checkpoint_dir = c.out_dir;
  tc.log_csv = c.out_dir + "/training_log.csv";

  TrainPolicyResult result = train_policy(
      task, rp, needs_encoder ? &enc_params : nullptr,
      needs_encoder ? &enc_cfg : nullptr, needs_encoder ? &goal : nullptr, tc);
  write_manifest(c.out_dir, c,
                 existing({c.encoder_checkpoint, c.goal_dir + "/meta.json",
                           c.goal_dir + "/frame.f32"}));
  std::cout << "final success rate " << result.log.back().success_rate << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  PolicyCheckpoint pc = load_policy_checkpoint(c.policy_checkpoint);
  if (pc.task != task.id)
    throw Error("evaluate: checkpoint task does not match --task");

  ParamStore enc_params;
  EncoderConfig enc_cfg;
  GoalSpec goal;
  bool with_encoder = false;
  if (!c.encoder_checkpoint.empty() && !c.goal_dir.empty()) {
    std::tie(enc_params, enc_cfg) = load_encoder_checkpoint(c.encoder_checkpoint);
    goal = load_goal(c.goal_dir);
    with_encoder = true;
  }
  std::vector<uint64_t> seeds = c.seeds;
  if (seeds.empty())
    for (int i = 0; i < 3; ++i)
      seeds.push_back(derive_seed(c.seed, "eval") + i);

  EvalReport report = evaluate(task, pc.params, seeds, c.views,
                               with_encoder ? &enc_params : nullptr,
                               with_encoder ? &enc_cfg : nullptr,
                               with_encoder ? &goal : nullptr, c.reward_mode);
  fs::create_directories(c.out_dir);
  save_eval_report(report, c.out_dir + "/eval_report.json");
  write_manifest(c.out_dir, c,
                 existing({c.policy_checkpoint, c.encoder_checkpoint}));
  std::cout << "success " << report.successes << "/" << report.runs << "\n";
  return kExitOk;
}

int cmd_compare(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  auto [enc_params, enc_cfg] = load_encoder_checkpoint(c.encoder_checkpoint);
  GoalSpec goal = load_goal(c.goal_dir);

  ParamStore abl_params;
  EncoderConfig abl_cfg;
  bool with_ablated = !c.ablated_checkpoint.empty();
  if (with_ablated)
    std::tie(abl_params, abl_cfg) = load_encoder_checkpoint(c.ablated_checkpoint);

  std::vector<uint64_t> eval_seeds = c.seeds;
  if (eval_seeds.empty())
    for (int i = 0; i < 3; ++i)
      eval_seeds.push_back(derive_seed(c.seed, "eval") + i);

  struct ModeRun {
    std::string name;
    RewardMode mode;
    const ParamStore* params;
    const EncoderConfig* cfg;
  };
  std::vector<ModeRun> modes{{"coord", RewardMode::kCoord, &enc_params, &enc_cfg},
                             {"expert", RewardMode::kExpert, nullptr, nullptr}};
  if (with_ablated)
    modes.insert(modes.begin() + 1,
                 {"ablated", RewardMode::kAblated, &abl_params, &abl_cfg});

  std::vector<std::vector<std::string>> success_rows, smooth_rows, rho_rows;
  for (const auto& m : modes) {
    RewardParams rp;
    rp.mode = m.mode;
    TrainPolicyConfig tc;
    tc.n_envs = c.n_envs;
    tc.iterations = c.iterations;
    tc.reward_stride = c.reward_stride;
    tc.seed = derive_seed(c.seed, "compare:" + m.name);
    TrainPolicyResult tr =
        train_policy(task, rp, m.params, m.cfg,
                     m.mode == RewardMode::kExpert ? nullptr : &goal, tc);
    EvalReport report = evaluate(task, tr.best_params, eval_seeds, c.views,
                                 &enc_params, &enc_cfg, &goal, m.name);
    success_rows.push_back({m.name, task_name(task.id),
                            std::to_string(report.successes) + "/" +
                                std::to_string(report.runs)});
    smooth_rows.push_back({m.name, task_name(task.id),
                           report.smooth_count > 0 ? fmt(report.mean_smoothness)
                                                   : "n/a"});
    rho_rows.push_back({m.name, task_name(task.id),
                        report.rho_count > 0 ? fmt(report.mean_rho) : "n/a"});
    fs::create_directories(c.out_dir);
    save_eval_report(report, c.out_dir + "/eval_" + m.name + ".json");
  }
  fs::create_directories(c.out_dir);
  write_csv(c.out_dir + "/success.csv", {"method", "task", "successes"},
            success_rows);
  write_csv(c.out_dir + "/smoothness.csv", {"method", "task", "mean_gamma_s"},
            smooth_rows);
  write_csv(c.out_dir + "/consistency.csv", {"method", "task", "mean_rho"},
            rho_rows);
  write_manifest(c.out_dir, c,
                 existing({c.encoder_checkpoint, c.ablated_checkpoint}));
  std::cout << "comparison tables written to " << c.out_dir << "\n";
  return kExitOk;
}

int cmd_collect_demos(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  const int n = c.n > 0 ? c.n : 12;
  ParamStore policy_params;
  const ParamStore* params_ptr = nullptr;
  if (!c.policy_checkpoint.empty()) {
    PolicyCheckpoint pc = load_policy_checkpoint(c.policy_checkpoint);
    if (pc.task != task.id)
      throw Error("collect-demos: checkpoint task does not match --task");
    policy_params = std::move(pc.params);
    params_ptr = &policy_params;
  }
  DemoSet demos = collect_demos(task, params_ptr, n, c.seed);
  demos.save(c.out_dir);
  write_manifest(c.out_dir, c, existing({c.policy_checkpoint}));
  std::cout << "collected " << n << " demos to " << c.out_dir << "\n";
  return kExitOk;
}

int cmd_train_bc(const RunConfig& c) {
  DemoSet demos = DemoSet::load(c.demos_dir);
  BcTrainConfig tc;
  tc.seed = c.seed;
  if (c.steps > 0) tc.steps = c.steps;
  if (c.batch_size > 0) tc.batch_size = c.batch_size;
  if (c.lr > 0.0) tc.lr = c.lr;
  BcTrainResult result = train_bc(demos, tc);
  fs::create_directories(c.out_dir);
  save_policy_checkpoint(c.out_dir + "/bc.ckpt", result.params, demos.task,
                         obs_dim(demos.task), {{"bc", true}});
  write_manifest(c.out_dir, c, dir_files(c.demos_dir));
  std::cout << "train mse " << result.final_train_mse
            << " (zero-predictor baseline " << result.zero_predictor_mse
            << ")\n";
  return kExitOk;
}

int cmd_eval_bc(const RunConfig& c) {
  const TaskCatalog catalog = TaskCatalog::builtin();
  const TaskSpec& task = catalog.get(c.task);
  PolicyCheckpoint pc = load_policy_checkpoint(c.policy_checkpoint);
  DemoSet demos = DemoSet::load(c.demos_dir);
  const int count = c.n > 0 ? c.n : 9;
  std::vector<uint64_t> seeds =
      c.seeds.empty() ? unseen_eval_seeds(task, count, c.seed, demos.seeds())
                      : c.seeds;
  BcEvalResult result = eval_bc(task, pc.params, seeds, demos.seeds());
  fs::create_directories(c.out_dir);
  nlohmann::json j{{"task", task_name(task.id)},
                   {"successes", result.successes},
                   {"attempts", result.attempts},
                   {"seeds", seeds}};
  std::ofstream out(c.out_dir + "/bc_eval.json");
  out << j.dump(2) << "\n";
  write_manifest(c.out_dir, c, existing({c.policy_checkpoint}));
  std::cout << "bc success " << result.successes << "/" << result.attempts
            << "\n";
  return kExitOk;
}

// --- report: hand-rolled SVG emission --------------------------------------

std::string svg_polyline(const std::vector<double>& ys, double w, double h,
                         const char* color) {
  double lo = 1e300, hi = -1e300;
  for (double y : ys) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  if (hi <= lo) hi = lo + 1.0;
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color
     << "\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < ys.size(); ++i) {
    const double x = 40.0 + (w - 50.0) * i / std::max<size_t>(1, ys.size() - 1);
    const double y = h - 20.0 - (h - 40.0) * (ys[i] - lo) / (hi - lo);
    os << x << "," << y << " ";
  }
  os << "\"/>\n";
  return os.str();
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<double>& ys) {
  std::ofstream out(path);
  if (!out) throw Error("report: cannot write " + path);
  const double w = 480, h = 280;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"12\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">"
      << title << "</text>\n"
      << svg_polyline(ys, w, h, "#2060c0") << "</svg>\n";
}

std::vector<double> csv_column(const std::string& path, const std::string& col) {
  std::ifstream in(path);
  if (!in) throw Error("report: cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  std::string cell;
  int target = -1;
  for (int i = 0; std::getline(hs, cell, ','); ++i)
    if (cell == col) target = i;
  if (target < 0) throw Error("report: column " + col + " missing in " + path);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string v;
    for (int i = 0; std::getline(ls, v, ','); ++i)
      if (i == target && !v.empty()) out.push_back(std::stod(v));
  }
  return out;
}

int cmd_report(const RunConfig& c) {
  fs::create_directories(c.out_dir);
  int written = 0;
  if (fs::exists(c.out_dir + "/loss_curve.csv")) {
    write_line_chart(c.out_dir + "/loss_curve.svg", "encoder train loss",
                     csv_column(c.out_dir + "/loss_curve.csv", "train_loss"));
    ++written;
  }
  if (fs::exists(c.out_dir + "/training_log.csv")) {
    write_line_chart(
        c.out_dir + "/mean_return.svg", "mean return per iteration",
        csv_column(c.out_dir + "/training_log.csv", "mean_return"));
    write_line_chart(
        c.out_dir + "/success_rate.svg", "success rate per iteration",
        csv_column(c.out_dir + "/training_log.csv", "success_rate"));
    written += 2;
  }
  if (written == 0)
    throw Error("report: no loss_curve.csv or training_log.csv in " +
                c.out_dir);
  write_manifest(c.out_dir, c, {});
  std::cout << "wrote " << written << " plots to " << c.out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct Dispatch {
  const char* name;
  const char* help;
  int (*run)(const RunConfig&);
};

const Dispatch kDispatch[] = {
    {"gen-demos", "generate demonstration clips with the scripted expert",
     cmd_gen_demos},
    {"make-goal", "render a goal specification from an expert success",
     cmd_make_goal},
    {"train-encoder", "train the goal-similarity encoder (stage 1 or 2)",
     cmd_train_encoder},
    {"eval-encoder", "held-out progress consistency of an encoder",
     cmd_eval_encoder},
    {"train-policy", "PPO skill training under a reward mode",
     cmd_train_policy},
    {"evaluate", "seed x view evaluation of a policy checkpoint",
     cmd_evaluate},
    {"compare", "train + evaluate all reward modes; emit tables", cmd_compare},
    {"collect-demos", "collect successful demonstrations", cmd_collect_demos},
    {"train-bc", "behavior cloning from a demo set", cmd_train_bc},
    {"eval-bc", "evaluate a cloned policy on unseen seeds", cmd_eval_bc},
    {"report", "emit SVG plots from run outputs", cmd_report},
};

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  // a config/manifest file supplies defaults; explicit flags override
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") cfg = RunConfig::load(argv[i + 1]);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App app{"desk-scale bimanual skill pipeline"};
  app.require_subcommand(1);
  int (*run)(const RunConfig&) = nullptr;
  std::string config_path;  // consumed in the pre-pass above
  for (const auto& d : kDispatch) {
    CLI::App* sub = app.add_subcommand(d.name, d.help);
    sub->add_option("--config", config_path,
                    "run config or manifest supplying defaults");
    sub->add_option("--task", cfg.task, "task name");
    sub->add_option("--seed", cfg.seed, "root seed");
    sub->add_option("--seeds", cfg.seeds, "explicit evaluation seeds");
    sub->add_option("--views", cfg.views, "view ids");
    sub->add_option("--reward-mode", cfg.reward_mode,
                    "coord | ablated | expert | coord+proprio");
    sub->add_option("--encoder", cfg.encoder_checkpoint, "encoder checkpoint");
    sub->add_option("--ablated-encoder", cfg.ablated_checkpoint,
                    "hand-ablated encoder checkpoint");
    sub->add_option("--policy", cfg.policy_checkpoint, "policy checkpoint");
    sub->add_option("--init", cfg.init_checkpoint,
                    "stage-1 encoder checkpoint (stage 2 init)");
    sub->add_option("--clips", cfg.clips_dir, "clip dataset directory");
    sub->add_option("--goal", cfg.goal_dir, "goal directory");
    sub->add_option("--demos", cfg.demos_dir, "demo set directory");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--envs", cfg.n_envs, "environment count");
    sub->add_option("--iterations", cfg.iterations, "training iterations");
    sub->add_option("--steps", cfg.steps, "gradient steps");
    sub->add_option("--batch", cfg.batch_size, "batch size");
    sub->add_option("--lr", cfg.lr, "learning rate");
    sub->add_option("--n", cfg.n, "clip/demo/eval count");
    sub->add_option("--stride", cfg.stride, "clip frame stride");
    sub->add_option("--stage", cfg.stage, "encoder training stage (1|2)");
    sub->add_option("--reward-stride", cfg.reward_stride,
                    "similarity recomputation stride");
    sub->add_flag("--ablate-hands", cfg.ablate_hands,
                  "train the encoder without hand tokens");
    sub->callback([&run, &cfg, &d] {
      run = d.run;
      cfg.command = d.name;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cfg.out_dir.empty()) throw Error("missing --out output directory");
    if (!cfg.task.empty()) task_from_name(cfg.task);  // validate early
    reward_mode_from_name(cfg.reward_mode);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    return run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
