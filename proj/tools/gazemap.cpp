// gazemap command-line tool: synth | train | eval | curves | project
//
// Every command resolves its flags into a JSON config, runs from that config
// alone and writes manifest.json (config, seed, input and artifact hashes)
// into the output directory. `--from-manifest` replays a recorded config.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazemap/gazemap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gazemap;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fnv1a64(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string() + " for hashing");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

class Run {
 public:
  Run(std::string command, json config, fs::path out) : command_(std::move(command)), config_(std::move(config)), out_(std::move(out)) {
    fs::create_directories(out_);
  }

  fs::path path(const std::string& name) const { return out_ / name; }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path(name), std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path(name).string() + " for writing");
    artifacts_.push_back(name);
    return os;
  }

  void record(const std::string& name) { artifacts_.push_back(name); }
  void input(const fs::path& p) { inputs_[p.string()] = fnv1a64(p); }

  void finish() {
    json artifacts = json::object();
    for (const auto& a : artifacts_) artifacts[a] = fnv1a64(path(a));
    json manifest{{"tool", "gazemap"},
                  {"version", kVersion},
                  {"command", command_},
                  {"config", config_},
                  {"seed", config_.value("seed", std::uint64_t{0})},
                  {"inputs", inputs_},
                  {"artifacts", artifacts}};
    std::ofstream os(path("manifest.json"));
    require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path("manifest.json").string());
    os << manifest.dump(2) << '\n';
  }

 private:
  std::string command_;
  json config_;
  fs::path out_;
  std::vector<std::string> artifacts_;
  json inputs_ = json::object();
};

void require_file(const std::string& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p);
}

std::optional<Phase> phase_filter(const json& cfg) {
  const auto text = cfg.value("phase", std::string("all"));
  if (text == "all") return std::nullopt;
  auto p = parse_phase(text);
  if (!p) throw UsageError("unknown phase '" + text + "'");
  return p;
}

ModelSpec model_spec(const json& cfg) {
  ModelSpec s;
  try {
    s = model_spec_from_json(cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (s.ard && !is_gpr(s.kind)) throw UsageError("--ard applies only to gpr-* models");
  return s;
}

// ---------------------------------------------------------------------------
// Commands

void run_synth(const json& cfg, const fs::path& out) {
  SynthSpec spec;
  if (const auto cfile = cfg.value("config_file", std::string()); !cfile.empty()) {
    require_file(cfile, "synth config");
    std::ifstream is(cfile);
    spec = parse_synth_config(is);
  }
  if (cfg.contains("drivers")) spec.drivers = cfg.at("drivers").get<int>();
  if (cfg.contains("frames")) spec.frames_per_marker = cfg.at("frames").get<int>();
  if (cfg.contains("phases")) {
    spec.phases.clear();
    for (const auto& name : cfg.at("phases").get<std::vector<std::string>>()) {
      auto p = parse_phase(name);
      if (!p) throw UsageError("unknown phase '" + name + "'");
      spec.phases.push_back(*p);
    }
  }
  validate(spec);
  Run run("synth", cfg, out);
  if (const auto cfile = cfg.value("config_file", std::string()); !cfile.empty()) run.input(cfile);
  const auto records = synthesize(spec, cfg.at("seed").get<std::uint64_t>());
  {
    auto os = run.open("dataset.csv");
    write_records(os, records);
  }
  run.finish();
}

std::vector<DriveRecord> load_dataset(const json& cfg, Run& run) {
  const auto data = cfg.at("data").get<std::string>();
  run.input(data);
  return load_records(data);
}

void run_train(const json& cfg, const fs::path& out) {
  require_file(cfg.at("data").get<std::string>(), "dataset");
  const ModelSpec spec = model_spec(cfg);
  const auto phase = phase_filter(cfg);
  Run run("train", cfg, out);
  auto records = load_dataset(cfg, run);
  if (phase) records = select_phase(records, *phase);
  require(!records.empty(), ErrorKind::argument, "no records left after the phase filter");
  const auto normalized = normalize_all(records);
  const auto ids = driver_ids(normalized);
  // Networks select snapshots on a held-out driver; the others use everyone.
  const bool needs_val = spec.kind == ModelKind::nn || spec.kind == ModelKind::mdn || spec.kind == ModelKind::gpr_nn;
  std::string val_driver = cfg.value("validation_driver", std::string());
  if (val_driver.empty()) val_driver = ids.back();
  if (std::find(ids.begin(), ids.end(), val_driver) == ids.end()) {
    throw UsageError("validation driver '" + val_driver + "' is not in the dataset");
  }
  std::vector<std::string> train_ids;
  for (const auto& id : ids) {
    if (!needs_val || id != val_driver) train_ids.push_back(id);
  }
  require(!train_ids.empty(), ErrorKind::argument, "no training drivers left");
  const auto train = select_drivers(normalized, train_ids);
  const auto val = select_drivers(normalized, {val_driver});
  const GazeModel model = fit_model(spec, train, val, cfg.at("seed").get<std::uint64_t>());
  save_model(run.path("model.json"), model);
  run.record("model.json");
  run.finish();
}

ReportLabel label_of(const json& cfg, const std::string& model) {
  return {model, cfg.value("features", std::string("full6d")), cfg.value("phase", std::string("all")),
          cfg.value("seed", std::uint64_t{0})};
}

void write_reports(Run& run, const ReportLabel& label, const ExperimentResult& res, const std::string& suffix = "") {
  {
    auto os = run.open("curve" + suffix + ".csv");
    write_curve(os, label, res.curve);
  }
  {
    auto os = run.open("calibration" + suffix + ".csv");
    write_calibration(os, label, res.calibration);
  }
}

void write_tables(Run& run, const std::vector<std::pair<ReportLabel, ExperimentResult>>& runs) {
  {
    auto os = run.open("table_area.csv");
    write_area_table(os, runs);
  }
  {
    auto os = run.open("table_accuracy.csv");
    write_accuracy_table(os, runs);
  }
}

std::vector<double> confidence_grid(const json& cfg) {
  const int levels = cfg.value("levels", 99);
  if (levels < 1) throw UsageError("--levels must be at least 1");
  std::vector<double> grid;
  for (int i = 1; i <= levels; ++i) grid.push_back(static_cast<double>(i) / (levels + 1));
  return grid;
}

void run_eval(const json& cfg, const fs::path& out) {
  require_file(cfg.at("data").get<std::string>(), "dataset");
  const auto model_file = cfg.value("model_file", std::string());
  if (!model_file.empty()) require_file(model_file, "model file");
  const auto phase = phase_filter(cfg);
  const auto grid = confidence_grid(cfg);
  const int bins = cfg.value("bins", 100);
  if (bins < 1) throw UsageError("--bins must be at least 1");

  Run run("eval", cfg, out);
  const auto records = load_dataset(cfg, run);
  ExperimentResult res;
  ReportLabel label;
  if (!model_file.empty()) {
    run.input(model_file);
    const GazeModel model = load_model(model_file);
    res = evaluate_model(model, records, phase, grid, bins);
    label = label_of(cfg, describe(model.spec));
    label.features = std::string(to_string(model.spec.features));
  } else {
    ExperimentConfig ec;
    ec.model = model_spec(cfg);
    ec.phase = phase;
    ec.seed = cfg.at("seed").get<std::uint64_t>();
    ec.jobs = cfg.value("jobs", 1);
    ec.grid = grid;
    ec.calibration_bins = bins;
    res = run_experiment(records, ec);
    label = label_of(cfg, describe(ec.model));
  }
  {
    auto os = run.open("predictions.csv");
    write_predictions(os, label, res.predictions);
  }
  write_reports(run, label, res);
  write_tables(run, {{label, res}});
  {
    auto os = run.open("summary.json");
    os << summary_json(label, res).dump(2) << '\n';
  }
  run.finish();
}

void run_curves(const json& cfg, const fs::path& out) {
  const auto files = cfg.at("predictions").get<std::vector<std::string>>();
  if (files.empty()) throw UsageError("at least one predictions file is required");
  for (const auto& f : files) require_file(f, "predictions file");
  const auto grid = confidence_grid(cfg);
  const int bins = cfg.value("bins", 100);
  if (bins < 1) throw UsageError("--bins must be at least 1");

  Run run("curves", cfg, out);
  std::vector<std::pair<ReportLabel, ExperimentResult>> runs;
  for (std::size_t k = 0; k < files.size(); ++k) {
    run.input(files[k]);
    std::ifstream is(files[k]);
    require(static_cast<bool>(is), ErrorKind::io, "cannot open " + files[k]);
    ReportLabel label;
    ExperimentResult res;
    try {
      res.predictions = read_predictions(is, &label);
    } catch (const Error& e) {
      throw Error(e.kind(), files[k] + ": " + e.what());
    }
    require(!res.predictions.empty(), ErrorKind::validation, files[k] + ": no prediction rows");
    summarize(res, grid, bins);
    write_reports(run, label, res, "_" + std::to_string(k));
    runs.emplace_back(label, std::move(res));
  }
  write_tables(run, runs);
  run.finish();
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError(std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  return out;
}

void run_project(const json& cfg, const fs::path& out) {
  const auto model_file = cfg.at("model_file").get<std::string>();
  require_file(model_file, "model file");
  const auto data = cfg.value("data", std::string());
  if (!data.empty()) require_file(data, "dataset");
  const auto levels = cfg.at("contours").get<std::vector<double>>();
  for (double c : levels) {
    if (!(c > 0.0 && c < 1.0)) throw UsageError("contour levels must lie in (0, 1)");
  }
  const auto depths = cfg.at("depths").get<std::vector<double>>();
  if (depths.empty()) throw UsageError("--depths must not be empty");
  const auto pose = cfg.at("pose").get<std::vector<double>>();
  if (pose.size() != 6) throw UsageError("--pose takes six numbers: x,y,z,alpha,beta,gamma");
  const auto extent = cfg.at("extent").get<std::vector<double>>();
  if (extent.size() != 2) throw UsageError("--extent takes two numbers: width,height in meters");

  Run run("project", cfg, out);
  run.input(model_file);
  const GazeModel model = load_model(model_file);
  HeadPose head;
  if (!data.empty()) {
    auto records = load_dataset(cfg, run);
    if (const auto phase = phase_filter(cfg)) records = select_phase(records, *phase);
    const auto normalized = normalize_all(records);
    const auto index = cfg.value("index", std::size_t{0});
    require(index < normalized.size(), ErrorKind::argument,
            "record index " + std::to_string(index) + " out of range (" + std::to_string(normalized.size()) + " records)");
    head = normalized[index].head;
  } else {
    head.position = Vec3(pose[0], pose[1], pose[2]);
    head.orientation = Vec3(pose[3], pose[4], pose[5]);
  }
  const GazeDistribution dist = model.predict(head);
  const DensityOptions opt{cfg.value("jacobian", false)};

  std::vector<Vec3> pane;
  for (int id = 1; id <= 13; ++id) pane.push_back(marker_layout()[static_cast<std::size_t>(id - 1)]);
  const Plane plane = fit_plane(pane).plane;
  const Vec3 ahead = intersect_ray_plane(gaze_ray(head.position, 0.0, 0.0), plane).point;
  const PlaneGrid grid = make_plane_grid(plane, ahead, extent[0], extent[1], cfg.at("width").get<int>(),
                                         cfg.at("height").get<int>());
  const HeatMap shield = windshield_density(dist, head, grid, opt);
  render(shield, run.path("windshield.pgm"), levels);
  run.record("windshield.pgm");
  if (!levels.empty()) run.record("windshield.contours.txt");

  const CameraMapping camera = default_road_camera(cfg.at("camera_width").get<int>(), cfg.at("camera_height").get<int>());
  const HeatMap road = road_density(dist, head, camera, depths, opt);
  render(road, run.path("road.pgm"), levels);
  run.record("road.pgm");
  if (!levels.empty()) run.record("road.contours.txt");

  const auto [ax, ay] = shield.argmax();
  const auto [rx, ry] = road.argmax();
  json info{{"distribution",
             {{"mean_theta", dist.horizontal.mean},
              {"var_theta", dist.horizontal.variance},
              {"mean_phi", dist.vertical.mean},
              {"var_phi", dist.vertical.variance}}},
            {"head", {head.position.x(), head.position.y(), head.position.z(), head.orientation.x(),
                      head.orientation.y(), head.orientation.z()}},
            {"windshield_plane", {{"normal", {plane.normal.x(), plane.normal.y(), plane.normal.z()}}, {"offset", plane.offset}}},
            {"windshield_argmax", {ax, ay}},
            {"road_argmax", {rx, ry}}};
  {
    auto os = run.open("projection.json");
    os << info.dump(2) << '\n';
  }
  run.finish();
}

// ---------------------------------------------------------------------------

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("GAZEMAP_OUT"); env && *env) return env;
  return "gazemap-out";
}

json load_manifest(const std::string& path, const std::string& command) {
  require_file(path, "manifest");
  std::ifstream is(path);
  json m;
  try {
    is >> m;
  } catch (const json::exception& e) {
    throw UsageError("cannot parse manifest " + path + ": " + e.what());
  }
  if (m.value("command", std::string()) != command) {
    throw UsageError("manifest " + path + " records command '" + m.value("command", std::string()) + "', not '" +
                     command + "'");
  }
  return m.at("config");
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic driver gaze maps from head pose"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string out_flag, manifest_flag;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--out", out_flag, "Output directory (default: $GAZEMAP_OUT or ./gazemap-out)");
    auto* m = sub->add_option("--from-manifest", manifest_flag, "Replay the config recorded in a manifest.json");
    auto* s = sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    s->excludes(m);
    return m;
  };
  auto exclude_all = [](CLI::App*, CLI::Option* m, std::initializer_list<CLI::Option*> opts) {
    for (auto* o : opts) o->excludes(m);
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic drive dataset");
  int drivers = 0, frames = 0;
  std::vector<std::string> phases;
  std::string synth_config;
  {
    auto* m = add_common(synth);
    exclude_all(synth, m,
                {synth->add_option("--drivers", drivers, "Number of drivers")->check(CLI::Range(1, 999)),
                 synth->add_option("--frames", frames, "Frames per marker")->check(CLI::PositiveNumber),
                 synth->add_option("--phases", phases, "Phases to generate (parked, driving, controlled)")
                     ->delimiter(','),
                 synth->add_option("--config", synth_config, "key=value generator config file")});
  }

  // model flags shared by train and eval
  std::string data, model_kind, features = "full6d", phase = "all", model_file;
  bool ard = false;
  std::size_t cap = 2000, hyper_rows = 800;
  int restarts = 5, epochs = 1000, batch = 32, jobs = 1, levels = 99, bins = 100;
  double lr = 1e-3;
  std::string validation_driver;
  auto add_model_flags = [&](CLI::App* sub, CLI::Option* m, bool model_required) {
    auto* kind = sub->add_option("--model", model_kind, "lr | nn | mdn | gpr-zero | gpr-const | gpr-linear | gpr-nn")
                     ->check(CLI::IsMember({"lr", "nn", "mdn", "gpr-zero", "gpr-const", "gpr-linear", "gpr-nn"}));
    if (model_required) kind->required();
    exclude_all(sub, m,
                {kind, sub->add_flag("--ard", ard, "Per-dimension kernel length scales (gpr-* only)"),
                 sub->add_option("--features", features, "full6d | orientation3d | orientation_plus_xy")
                     ->check(CLI::IsMember({"full6d", "orientation3d", "orientation_plus_xy"})),
                 sub->add_option("--cap", cap, "Stratified cap on GPR training rows")->check(CLI::Range(2, 1000000)),
                 sub->add_option("--hyper-rows", hyper_rows, "Rows used for GPR hyperparameter search (0 = all)"),
                 sub->add_option("--restarts", restarts, "GPR optimizer starts")->check(CLI::Range(1, 100)),
                 sub->add_option("--epochs", epochs, "Network training epochs")->check(CLI::Range(0, 100000)),
                 sub->add_option("--batch", batch, "Network mini-batch size")->check(CLI::Range(1, 100000)),
                 sub->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber)});
  };
  auto model_config = [&](json& cfg) {
    cfg["kind"] = model_kind;
    cfg["ard"] = ard;
    cfg["features"] = features;
    cfg["gpr_cap"] = cap;
    cfg["hyper_rows"] = hyper_rows;
    cfg["restarts"] = restarts;
    cfg["max_epochs"] = epochs;
    cfg["batch_size"] = batch;
    cfg["learning_rate"] = lr;
  };

  auto* train = app.add_subcommand("train", "Fit one model on a dataset");
  {
    auto* m = add_common(train);
    auto* d = train->add_option("--data", data, "Dataset CSV");
    d->excludes(m);
    add_model_flags(train, m, false);
    exclude_all(train, m,
                {train->add_option("--phase", phase, "Phase filter (parked, driving, controlled, all)"),
                 train->add_option("--validation-driver", validation_driver,
                                   "Held-out driver for network snapshot selection (default: last)")});
  }

  auto* eval = app.add_subcommand("eval", "Leave-one-driver-out evaluation, or scoring of a saved model");
  {
    auto* m = add_common(eval);
    eval->add_option("-j,--jobs", jobs, "Folds trained in parallel")->check(CLI::Range(1, 256));
    add_model_flags(eval, m, false);
    exclude_all(eval, m,
                {eval->add_option("--data", data, "Dataset CSV"),
                 eval->add_option("--model-file", model_file, "Score this saved model instead of cross-validating"),
                 eval->add_option("--phase", phase, "Phase filter (parked, driving, controlled, all)"),
                 eval->add_option("--levels", levels, "Number of confidence levels on the curve"),
                 eval->add_option("--bins", bins, "Calibration grid size")});
  }

  auto* curves = app.add_subcommand("curves", "Curves and summary tables from prediction files");
  std::vector<std::string> prediction_files;
  {
    auto* m = add_common(curves);
    exclude_all(curves, m,
                {curves->add_option("--predictions", prediction_files, "predictions.csv files from eval"),
                 curves->add_option("--levels", levels, "Number of confidence levels on the curve"),
                 curves->add_option("--bins", bins, "Calibration grid size")});
  }

  auto* project = app.add_subcommand("project", "Render windshield and road heat maps for one head pose");
  std::string pose = "0,0,0,0,0,0", depths_text, contours_text = "0.5", extent_text = "1.4,0.7";
  std::size_t index = 0;
  int width = 256, height = 128, cam_w = 640, cam_h = 480;
  bool jacobian = false;
  {
    auto* m = add_common(project);
    exclude_all(project, m,
                {project->add_option("--model-file", model_file, "Saved model (from train)"),
                 project->add_option("--pose", pose, "Normalized head pose x,y,z,alpha,beta,gamma"),
                 project->add_option("--data", data, "Take the head pose from this dataset"),
                 project->add_option("--index", index, "Record index (after phase filter) for --data"),
                 project->add_option("--phase", phase, "Phase filter for --data"),
                 project->add_option("--width", width, "Windshield grid columns")->check(CLI::Range(1, 8192)),
                 project->add_option("--height", height, "Windshield grid rows")->check(CLI::Range(1, 8192)),
                 project->add_option("--extent", extent_text, "Windshield window width,height in meters"),
                 project->add_option("--camera-width", cam_w, "Road image width")->check(CLI::Range(1, 8192)),
                 project->add_option("--camera-height", cam_h, "Road image height")->check(CLI::Range(1, 8192)),
                 project->add_option("--depths", depths_text, "Road plane depths in meters (default 10..200 step 10)"),
                 project->add_option("--contours", contours_text, "Contour levels, comma separated"),
                 project->add_flag("--jacobian", jacobian, "Density per unit plane area")});
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    json cfg;
    if (!manifest_flag.empty()) {
      cfg = load_manifest(manifest_flag, command);
      if (command == "eval" && sub->count("--jobs")) cfg["jobs"] = jobs;
    } else {
      cfg["seed"] = seed;
      if (command == "synth") {
        if (sub->count("--drivers")) cfg["drivers"] = drivers;
        if (sub->count("--frames")) cfg["frames"] = frames;
        if (sub->count("--phases")) cfg["phases"] = phases;
        if (!synth_config.empty()) cfg["config_file"] = synth_config;
      } else if (command == "train") {
        if (data.empty()) throw UsageError("train needs --data");
        if (model_kind.empty()) throw UsageError("train needs --model");
        cfg["data"] = data;
        model_config(cfg);
        cfg["phase"] = phase;
        cfg["validation_driver"] = validation_driver;
      } else if (command == "eval") {
        if (data.empty()) throw UsageError("eval needs --data");
        if (model_file.empty() == model_kind.empty()) throw UsageError("eval needs exactly one of --model or --model-file");
        if (!model_file.empty() && sub->count("--ard")) throw UsageError("--ard conflicts with --model-file");
        cfg["data"] = data;
        if (model_file.empty()) {
          model_config(cfg);
        } else {
          cfg["model_file"] = model_file;
        }
        cfg["phase"] = phase;
        cfg["jobs"] = jobs;
        cfg["levels"] = levels;
        cfg["bins"] = bins;
      } else if (command == "curves") {
        if (prediction_files.empty()) throw UsageError("curves needs --predictions");
        cfg["predictions"] = prediction_files;
        cfg["levels"] = levels;
        cfg["bins"] = bins;
      } else if (command == "project") {
        if (model_file.empty()) throw UsageError("project needs --model-file");
        if (!data.empty() && sub->count("--pose")) throw UsageError("--pose conflicts with --data");
        cfg["model_file"] = model_file;
        cfg["pose"] = parse_list(pose, "--pose");
        if (!data.empty()) {
          cfg["data"] = data;
          cfg["index"] = index;
          cfg["phase"] = phase;
        }
        cfg["width"] = width;
        cfg["height"] = height;
        cfg["extent"] = parse_list(extent_text, "--extent");
        cfg["camera_width"] = cam_w;
        cfg["camera_height"] = cam_h;
        cfg["depths"] = depths_text.empty() ? default_road_depths() : parse_list(depths_text, "--depths");
        cfg["contours"] = contours_text.empty() ? std::vector<double>{} : parse_list(contours_text, "--contours");
        cfg["jacobian"] = jacobian;
      }
    }
    const fs::path out = output_dir(out_flag);
    if (command == "synth") run_synth(cfg, out);
    else if (command == "train") run_train(cfg, out);
    else if (command == "eval") run_eval(cfg, out);
    else if (command == "curves") run_curves(cfg, out);
    else run_project(cfg, out);
  } catch (const UsageError& e) {
    std::cerr << "gazemap " << command << ": " << one_line(e.what()) << "\n\n" << sub->help();
    return 1;
  } catch (const Error& e) {
    std::cerr << "gazemap: error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "gazemap: error: schema: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gazemap: error: runtime: " << one_line(e.what()) << '\n';
    return 2;
  }
  return 0;
}
