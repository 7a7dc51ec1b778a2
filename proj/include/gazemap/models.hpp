#pragma once

// Uniform front end over the seven predictor kinds.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazemap/baselines.hpp"
#include "gazemap/dataset.hpp"
#include "gazemap/error.hpp"
#include "gazemap/gpr.hpp"
#include "gazemap/nnet.hpp"

namespace gazemap {

enum class ModelKind { lr, nn, mdn, gpr_zero, gpr_const, gpr_linear, gpr_nn };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::lr: return "lr";
    case ModelKind::nn: return "nn";
    case ModelKind::mdn: return "mdn";
    case ModelKind::gpr_zero: return "gpr-zero";
    case ModelKind::gpr_const: return "gpr-const";
    case ModelKind::gpr_linear: return "gpr-linear";
    case ModelKind::gpr_nn: return "gpr-nn";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::lr, ModelKind::nn, ModelKind::mdn, ModelKind::gpr_zero, ModelKind::gpr_const,
                 ModelKind::gpr_linear, ModelKind::gpr_nn}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline bool is_gpr(ModelKind k) {
  return k == ModelKind::gpr_zero || k == ModelKind::gpr_const || k == ModelKind::gpr_linear ||
         k == ModelKind::gpr_nn;
}

inline MeanKind gpr_mean(ModelKind k) {
  switch (k) {
    case ModelKind::gpr_const: return MeanKind::constant;
    case ModelKind::gpr_linear: return MeanKind::linear;
    case ModelKind::gpr_nn: return MeanKind::neural;
    default: return MeanKind::zero;
  }
}

struct ModelSpec {
  ModelKind kind = ModelKind::gpr_linear;
  bool ard = false;
  FeatureMode features = FeatureMode::full6d;
  std::size_t gpr_cap = 2000;   // training rows kept for GPR (stratified)
  int restarts = 5;
  std::size_t hyper_rows = 800;
  TrainConfig network;          // NN, MDN and the GPR neural mean
};

inline void validate(const ModelSpec& s) {
  require(!s.ard || is_gpr(s.kind), ErrorKind::argument, "--ard applies only to gpr-* models");
  require(s.gpr_cap >= 2, ErrorKind::argument, "GPR cap must be at least 2");
  require(s.restarts >= 1, ErrorKind::argument, "at least one optimizer start is required");
  validate(s.network);
}

inline std::string describe(const ModelSpec& s) {
  std::string out(to_string(s.kind));
  if (s.ard) out += "+ard";
  return out;
}

using AnyGazeModel = std::variant<LinRegGazeModel, NnRegGazeModel, MdnGazeModel, GprGazeModel>;

struct GazeModel {
  ModelSpec spec;
  AnyGazeModel model;

  GazeDistribution predict(const HeadPose& head) const {
    return std::visit([&](const auto& m) { return m.predict(head); }, model);
  }

  std::vector<GazeDistribution> predict(const std::vector<DriveRecord>& records) const {
    if (const auto* g = std::get_if<GprGazeModel>(&model)) return g->predict(records);
    std::vector<GazeDistribution> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(predict(r.head));
    return out;
  }
};

/// Fits on normalized records; `val` drives snapshot selection for networks.
inline GazeModel fit_model(const ModelSpec& spec, const std::vector<DriveRecord>& train,
                           const std::vector<DriveRecord>& val, std::uint64_t seed) {
  validate(spec);
  require(!train.empty(), ErrorKind::argument, "fit_model: empty training set");
  TrainConfig net = spec.network;
  net.seed = seed;
  switch (spec.kind) {
    case ModelKind::lr: return {spec, fit_linreg(train, spec.features)};
    case ModelKind::nn: return {spec, fit_nn(train, val, spec.features, net)};
    case ModelKind::mdn: return {spec, fit_mdn(train, val, spec.features, net)};
    default: break;
  }
  GprOptions opt;
  opt.mean = gpr_mean(spec.kind);
  opt.ard = spec.ard;
  opt.restarts = spec.restarts;
  opt.hyper_rows = spec.hyper_rows;
  opt.network = net;
  const auto capped = train.size() > spec.gpr_cap ? stratified_subsample(train, spec.gpr_cap) : train;
  GprGazeModel g;
  g.horizontal = fit_gpr(capped, val, GazeComponent::horizontal, opt, spec.features, seed).model;
  opt.network.seed = seed + 1;
  g.vertical = fit_gpr(capped, val, GazeComponent::vertical, opt, spec.features, seed + 1).model;
  return {spec, std::move(g)};
}

// ---------------------------------------------------------------------------
// Serialization envelope

inline constexpr std::string_view kModelFormat = "gazemap-model";
inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_spec_json(const ModelSpec& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"ard", s.ard},
          {"features", std::string(to_string(s.features))},
          {"gpr_cap", s.gpr_cap},
          {"restarts", s.restarts},
          {"hyper_rows", s.hyper_rows},
          {"learning_rate", s.network.learning_rate},
          {"batch_size", s.network.batch_size},
          {"max_epochs", s.network.max_epochs}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  const auto kind = parse_model_kind(j.at("kind").get<std::string>());
  require(kind.has_value(), ErrorKind::schema, "unknown model kind '" + j.at("kind").get<std::string>() + "'");
  s.kind = *kind;
  s.ard = j.value("ard", false);
  const auto features = parse_feature_mode(j.value("features", std::string("full6d")));
  require(features.has_value(), ErrorKind::schema, "unknown feature mode");
  s.features = *features;
  s.gpr_cap = j.value("gpr_cap", s.gpr_cap);
  s.restarts = j.value("restarts", s.restarts);
  s.hyper_rows = j.value("hyper_rows", s.hyper_rows);
  s.network.learning_rate = j.value("learning_rate", s.network.learning_rate);
  s.network.batch_size = j.value("batch_size", s.network.batch_size);
  s.network.max_epochs = j.value("max_epochs", s.network.max_epochs);
  return s;
}

inline nlohmann::json to_envelope(const GazeModel& m) {
  nlohmann::json j{{"format", std::string(kModelFormat)},
                   {"version", kModelFormatVersion},
                   {"kind", std::string(to_string(m.spec.kind))},
                   {"spec", model_spec_json(m.spec)}};
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (!std::is_same_v<T, GprGazeModel>) j["features"] = std::string(to_string(g.features));
        j["horizontal"] = g.horizontal;
        j["vertical"] = g.vertical;
      },
      m.model);
  return j;
}

inline GazeModel from_envelope(const nlohmann::json& j) {
  try {
    require(j.value("format", std::string()) == kModelFormat, ErrorKind::schema, "not a gazemap model file");
    require(j.at("version").get<int>() == kModelFormatVersion, ErrorKind::schema, "unsupported model file version");
    GazeModel m;
    m.spec = model_spec_from_json(j.at("spec"));
    require(std::string(to_string(m.spec.kind)) == j.at("kind").get<std::string>(), ErrorKind::schema,
            "model kind disagrees with its spec");
    auto fill = [&](auto& g) {
      g.features = m.spec.features;
      g.horizontal = j.at("horizontal");
      g.vertical = j.at("vertical");
    };
    switch (m.spec.kind) {
      case ModelKind::lr: {
        LinRegGazeModel g;
        fill(g);
        m.model = std::move(g);
        break;
      }
      case ModelKind::nn: {
        NnRegGazeModel g;
        fill(g);
        m.model = std::move(g);
        break;
      }
      case ModelKind::mdn: {
        MdnGazeModel g;
        fill(g);
        m.model = std::move(g);
        break;
      }
      default: {
        GprGazeModel g;
        g.horizontal = j.at("horizontal").get<GprModel>();
        g.vertical = j.at("vertical").get<GprModel>();
        m.model = std::move(g);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema, std::string("malformed model file: ") + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const GazeModel& m) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::io, "cannot open " + path.string() + " for writing");
  os << to_envelope(m).dump(1) << '\n';
  require(static_cast<bool>(os), ErrorKind::io, "failed writing " + path.string());
}

inline GazeModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return from_envelope(j);
}

}  // namespace gazemap
