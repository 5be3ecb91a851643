#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbid/engine.hpp"
#include "qbid/errors.hpp"

namespace qbid {

// Strict JSON configuration loader. Unknown keys are errors, not warnings:
// a silently ignored typo would invalidate an experiment.
namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path) {
  if (!j.is_object()) {
    throw ConfigError(path + ": expected an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(path + ": unknown key '" + key + "'");
    }
  }
}

inline const json& require(const json& j, const std::string& key,
                           const std::string& path) {
  if (!j.contains(key)) {
    throw ConfigError(path + ": missing key '" + key + "'");
  }
  return j.at(key);
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline long long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<long long>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

}  // namespace config_detail

inline ValueDistribution parse_distribution(const nlohmann::json& j,
                                            const std::string& path) {
  using namespace config_detail;
  const std::string kind = as_string(require(j, "kind", path), path + ".kind");
  try {
    if (kind == "uniform") {
      check_keys(j, {"kind", "lo", "hi"}, path);
      return ValueDistribution::uniform(
          as_number(require(j, "lo", path), path + ".lo"),
          as_number(require(j, "hi", path), path + ".hi"));
    }
    if (kind == "truncated_exponential") {
      check_keys(j, {"kind", "rate"}, path);
      return ValueDistribution::truncated_exponential(
          as_number(require(j, "rate", path), path + ".rate"));
    }
    if (kind == "piecewise_linear_cdf") {
      check_keys(j, {"kind", "knots"}, path);
      const auto& knots_json = require(j, "knots", path);
      if (!knots_json.is_array()) {
        throw ConfigError(path + ".knots: expected an array of [v, q] pairs");
      }
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : knots_json) {
        if (!k.is_array() || k.size() != 2) {
          throw ConfigError(path + ".knots: each knot must be [v, q]");
        }
        knots.emplace_back(as_number(k[0], path + ".knots"),
                           as_number(k[1], path + ".knots"));
      }
      return ValueDistribution::piecewise_linear_cdf(std::move(knots));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".kind: unknown distribution '" + kind + "'");
}

inline LearnerSpec parse_learner(const nlohmann::json& j,
                                 const std::string& path) {
  using namespace config_detail;
  check_keys(j, {"kind", "eta"}, path);
  LearnerSpec spec;
  const std::string kind = as_string(require(j, "kind", path), path + ".kind");
  if (kind == "mwu") {
    spec.kind = LearnerKind::kMwu;
  } else if (kind == "agile_ogd") {
    spec.kind = LearnerKind::kAgileOgd;
  } else if (kind == "lazy_ogd") {
    spec.kind = LearnerKind::kLazyOgd;
  } else {
    throw ConfigError(path + ".kind: unknown learner '" + kind + "'");
  }
  const auto& eta = require(j, "eta", path);
  if (eta.is_string()) {
    if (eta.get<std::string>() != "auto") {
      throw ConfigError(path + ".eta: expected a positive number or \"auto\"");
    }
    spec.eta = 0.0;
  } else {
    spec.eta = as_number(eta, path + ".eta");
    if (!(spec.eta > 0.0)) {
      throw ConfigError(path + ".eta: expected a positive number or \"auto\"");
    }
  }
  return spec;
}

inline FormatFamily parse_family(const std::string& name,
                                 const std::string& path) {
  if (name == "first_price") return FormatFamily::kFirstPrice;
  if (name == "second_price") return FormatFamily::kSecondPrice;
  if (name == "all_pay") return FormatFamily::kAllPay;
  if (name == "posted_price") return FormatFamily::kPostedPrice;
  if (name == "table") return FormatFamily::kTable;
  throw ConfigError(path + ": unknown auction family '" + name + "'");
}

// Format block: {"family": "...", "reserve_index": r} for parametric
// families, or {"family": "table", "allocation": [...], "payment": [...]}
// with flat row-major tables ((K+1)^n rows in lexicographic order, bidder 1
// slowest, n entries per row).
inline void parse_format_into(const nlohmann::json& j, const std::string& path,
                              PolicySpec& spec) {
  using namespace config_detail;
  const FormatFamily family = parse_family(
      as_string(require(j, "family", path), path + ".family"), path);
  if (family == FormatFamily::kTable) {
    check_keys(j, {"family", "allocation", "payment"}, path);
    spec.tabular = true;
    for (const char* key : {"allocation", "payment"}) {
      const auto& arr = require(j, key, path);
      if (!arr.is_array()) {
        throw ConfigError(path + "." + key + ": expected an array of numbers");
      }
      auto& out = std::string(key) == "allocation" ? spec.allocation
                                                   : spec.payment;
      for (const auto& v : arr) out.push_back(as_number(v, path + "." + key));
    }
  } else {
    check_keys(j, {"family", "reserve_index"}, path);
    spec.tabular = false;
    spec.family = family;
    spec.reserve = static_cast<int>(as_integer(
        require(j, "reserve_index", path), path + ".reserve_index"));
  }
}

inline PolicySpec parse_policy(const nlohmann::json& j,
                               const std::string& path) {
  using namespace config_detail;
  PolicySpec spec;
  const std::string kind = as_string(require(j, "kind", path), path + ".kind");
  if (kind == "static") {
    check_keys(j, {"kind", "format"}, path);
    spec.kind = PolicyKind::kStatic;
    parse_format_into(require(j, "format", path), path + ".format", spec);
  } else if (kind == "myopic_reserve") {
    check_keys(j, {"kind", "family"}, path);
    spec.kind = PolicyKind::kMyopicReserve;
    spec.family = parse_family(
        as_string(require(j, "family", path), path + ".family"),
        path + ".family");
    if (spec.family == FormatFamily::kTable) {
      throw ConfigError(path + ".family: myopic_reserve needs a parametric "
                        "family");
    }
  } else if (kind == "lower_bound") {
    check_keys(j, {"kind", "seed"}, path);
    spec.kind = PolicyKind::kLowerBound;
    spec.seed = static_cast<std::uint64_t>(
        as_integer(require(j, "seed", path), path + ".seed"));
  } else {
    throw ConfigError(path + ".kind: unknown auctioneer policy '" + kind +
                      "'");
  }
  return spec;
}

inline GameConfig parse_game_config(const nlohmann::json& j) {
  using namespace config_detail;
  check_keys(j,
             {"seed", "T", "K", "bidders", "auctioneer", "feedback_mode",
              "identity_stride", "output"},
             "config");
  GameConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(
      as_integer(require(j, "seed", "config"), "config.seed"));
  cfg.rounds = as_integer(require(j, "T", "config"), "config.T");
  cfg.K = static_cast<int>(as_integer(require(j, "K", "config"), "config.K"));
  if (cfg.rounds < 1 || cfg.K < 1) {
    throw ConfigError("config: need T >= 1 and K >= 1");
  }

  const auto& bidders = require(j, "bidders", "config");
  if (!bidders.is_array() || bidders.empty()) {
    throw ConfigError("config.bidders: expected a non-empty array");
  }
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const std::string path = "config.bidders[" + std::to_string(i) + "]";
    const auto& b = bidders[i];
    check_keys(b, {"distribution", "learner"}, path);
    BidderSpec spec;
    spec.dist = parse_distribution(require(b, "distribution", path),
                                   path + ".distribution");
    spec.learner = parse_learner(require(b, "learner", path),
                                 path + ".learner");
    cfg.bidders.push_back(std::move(spec));
  }

  cfg.auctioneer =
      parse_policy(require(j, "auctioneer", "config"), "config.auctioneer");

  const std::string mode = as_string(require(j, "feedback_mode", "config"),
                                     "config.feedback_mode");
  if (mode == "expected") {
    cfg.mode = FeedbackMode::kExpected;
  } else if (mode == "realized") {
    cfg.mode = FeedbackMode::kRealized;
  } else {
    throw ConfigError("config.feedback_mode: expected 'expected' or "
                      "'realized'");
  }

  if (j.contains("identity_stride")) {
    cfg.identity_stride =
        as_integer(j.at("identity_stride"), "config.identity_stride");
    if (cfg.identity_stride < 1) {
      throw ConfigError("config.identity_stride: must be >= 1");
    }
  }
  if (j.contains("output")) {
    const auto& out = j.at("output");
    check_keys(out, {"rounds_csv", "summary"}, "config.output");
    if (out.contains("rounds_csv")) {
      cfg.rounds_csv = as_string(out.at("rounds_csv"),
                                 "config.output.rounds_csv");
    }
    if (out.contains("summary")) {
      cfg.summary_path = as_string(out.at("summary"),
                                   "config.output.summary");
    }
  }
  return cfg;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

inline GameConfig load_game_config(const std::string& path) {
  return parse_game_config(load_json_file(path));
}

}  // namespace qbid
