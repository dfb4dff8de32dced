#pragma once

#include "lpacc/core.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lpacc {

/// One outer iteration. Optional fields are only present when the run had
/// the data to fill them (a reference optimum, a particular algorithm).
struct IterationRecord {
  int t = 0;
  double a = 0.0;
  double A_prev = 0.0;
  double A_next = 0.0;
  /// λ_t for the line-searched and ball methods, λ_{t+1} for the
  /// line-search-free method.
  double lambda_t = 0.0;
  /// ‖x' - y_t‖_p for the oracle output x'.
  double step_norm = 0.0;
  double objective = 0.0;
  int oracle_calls = 0;
  int inner_iterations = 0;

  /// A_next^{1/p} - A_prev^{1/p} and the lower bound it must clear.
  std::optional<double> growth;
  std::optional<double> growth_floor;

  std::optional<double> gap;
  std::optional<double> potential_prev;
  std::optional<double> potential_next;
  /// Decrease the potential must show (0 means "must not increase").
  std::optional<double> required_decrement;
  std::optional<double> slack;
  std::optional<bool> certified;

  // Line-search-free method.
  std::optional<double> lambda_bar;
  std::optional<double> beta;
  std::optional<double> A_prime;
  std::optional<int> step_case;
  std::optional<int> phase;
  std::optional<bool> restart;

  // Ball method.
  std::optional<bool> at_boundary;
  /// Relative multiplier-equation residual at boundary steps.
  std::optional<double> kkt_residual;

  // High-order method.
  std::optional<double> remainder;
  std::optional<double> remainder_bound;
  std::optional<double> smoothness;

  std::optional<double> wall_time;
};

template <class T>
void put_optional(nlohmann::ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

inline nlohmann::ordered_json to_json(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["type"] = "iteration";
  j["t"] = r.t;
  j["a"] = r.a;
  j["A_prev"] = r.A_prev;
  j["A_next"] = r.A_next;
  j["lambda_t"] = r.lambda_t;
  j["step_norm"] = r.step_norm;
  j["objective"] = r.objective;
  j["oracle_calls"] = r.oracle_calls;
  j["inner_iterations"] = r.inner_iterations;
  put_optional(j, "growth", r.growth);
  put_optional(j, "growth_floor", r.growth_floor);
  put_optional(j, "gap", r.gap);
  put_optional(j, "potential_prev", r.potential_prev);
  put_optional(j, "potential_next", r.potential_next);
  put_optional(j, "required_decrement", r.required_decrement);
  put_optional(j, "slack", r.slack);
  put_optional(j, "certified", r.certified);
  put_optional(j, "lambda_bar", r.lambda_bar);
  put_optional(j, "beta", r.beta);
  put_optional(j, "A_prime", r.A_prime);
  put_optional(j, "step_case", r.step_case);
  put_optional(j, "phase", r.phase);
  put_optional(j, "restart", r.restart);
  put_optional(j, "at_boundary", r.at_boundary);
  put_optional(j, "kkt_residual", r.kkt_residual);
  put_optional(j, "remainder", r.remainder);
  put_optional(j, "remainder_bound", r.remainder_bound);
  put_optional(j, "smoothness", r.smoothness);
  put_optional(j, "wall_time", r.wall_time);
  return j;
}

template <class T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

inline IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.t = j.at("t").get<int>();
  r.a = j.at("a").get<double>();
  r.A_prev = j.at("A_prev").get<double>();
  r.A_next = j.at("A_next").get<double>();
  r.lambda_t = j.at("lambda_t").get<double>();
  r.step_norm = j.at("step_norm").get<double>();
  r.objective = j.at("objective").get<double>();
  r.oracle_calls = j.value("oracle_calls", 0);
  r.inner_iterations = j.value("inner_iterations", 0);
  r.growth = get_optional<double>(j, "growth");
  r.growth_floor = get_optional<double>(j, "growth_floor");
  r.gap = get_optional<double>(j, "gap");
  r.potential_prev = get_optional<double>(j, "potential_prev");
  r.potential_next = get_optional<double>(j, "potential_next");
  r.required_decrement = get_optional<double>(j, "required_decrement");
  r.slack = get_optional<double>(j, "slack");
  r.certified = get_optional<bool>(j, "certified");
  r.lambda_bar = get_optional<double>(j, "lambda_bar");
  r.beta = get_optional<double>(j, "beta");
  r.A_prime = get_optional<double>(j, "A_prime");
  r.step_case = get_optional<int>(j, "step_case");
  r.phase = get_optional<int>(j, "phase");
  r.restart = get_optional<bool>(j, "restart");
  r.at_boundary = get_optional<bool>(j, "at_boundary");
  r.kkt_residual = get_optional<double>(j, "kkt_residual");
  r.remainder = get_optional<double>(j, "remainder");
  r.remainder_bound = get_optional<double>(j, "remainder_bound");
  r.smoothness = get_optional<double>(j, "smoothness");
  r.wall_time = get_optional<double>(j, "wall_time");
  return r;
}

/// JSON-lines trace: one header object, then one object per iteration
/// (accelerated solvers) or per refinement cycle (regression), then a
/// summary. Field order is fixed so equal runs give equal bytes.
struct Trace {
  nlohmann::ordered_json header;
  std::vector<IterationRecord> records;
  std::vector<nlohmann::ordered_json> cycles;
  nlohmann::ordered_json summary;

  void write(std::ostream& os) const {
    nlohmann::ordered_json h = header;
    h["type"] = "header";
    os << h.dump() << '\n';
    for (const auto& r : records) os << to_json(r).dump() << '\n';
    for (const auto& c : cycles) {
      nlohmann::ordered_json j;
      j["type"] = "cycle";
      j.update(c);
      os << j.dump() << '\n';
    }
    if (!summary.is_null()) {
      nlohmann::ordered_json s = summary;
      s["type"] = "summary";
      os << s.dump() << '\n';
    }
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static Trace parse(std::istream& is) {
    Trace tr;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DomainError("trace line " + std::to_string(lineno) + ": " + e.what());
      }
      const std::string type = j.value("type", "");
      if (type == "header") tr.header = j;
      else if (type == "iteration") tr.records.push_back(record_from_json(j));
      else if (type == "cycle") {
        j.erase("type");
        tr.cycles.push_back(std::move(j));
      } else if (type == "summary") tr.summary = j;
      else throw DomainError("trace line " + std::to_string(lineno) + ": unknown record type");
    }
    return tr;
  }
};

}  // namespace lpacc
