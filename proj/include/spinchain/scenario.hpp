#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "observables.hpp"
#include "operators.hpp"

namespace spinchain {

inline constexpr const char* library_version = "0.1.0";

// Each comparison run maps to exactly one evolution mode: the three clean
// modes integrate a pure state, the noisy ones average over trials.
enum class RunMode {
  Driven,
  Effective,
  Undriven,
  NoisyDriven,
  NoisyEffective,
  NoisyUndriven,
};

inline std::string run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Driven: return "driven";
    case RunMode::Effective: return "effective";
    case RunMode::Undriven: return "undriven";
    case RunMode::NoisyDriven: return "noisy_driven";
    case RunMode::NoisyEffective: return "noisy_effective";
    default: return "noisy_undriven";
  }
}

enum class TaskKind { Transfer, Concurrence };
enum class GridKind { Stroboscopic, Uniform };

// order of averaging for concurrence under noise: per-trial computes the
// observable on each trajectory and averages the numbers; averaged-state
// traces the trial-averaged density matrix first
enum class AveragingMode { PerTrial, AveragedState };

struct Scenario {
  std::string name;
  ChainModel model;
  std::optional<DriveSpec> drive;
  std::optional<NoiseSpec> noise;
  TaskKind task = TaskKind::Transfer;
  Axis task_basis = Axis::Z;
  int pair_a = 1;
  int pair_b = 2;
  AveragingMode averaging = AveragingMode::PerTrial;
  GridKind grid_kind = GridKind::Uniform;
  double horizon = 0.0;
  double grid_start = 0.0;
  int grid_points = 200;
  PropagatorConfig propagator;
  std::vector<RunMode> runs;
};

struct RunRecord {
  std::string scenario;
  std::string label;
  TimeGrid grid;
  std::vector<double> values;
  bool converged = true;
  bool high_frequency = true;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const auto end = comma == std::string::npos ? value.size() : comma;
    out.push_back(trim(value.substr(pos, end - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// flat `key = value` document; `#` starts a comment, keys are unique
class KvDoc {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    bool consumed = false;
  };

  static KvDoc parse(const std::string& text) {
    KvDoc doc;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto end = nl == std::string::npos ? text.size() : nl;
      std::string line = text.substr(pos, end - pos);
      ++line_no;
      pos = end + 1;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) {
        if (nl == std::string::npos) break;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected `key = value`", line_no, "");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ParseError("missing key before `=`", line_no, "");
      if (value.empty()) throw ParseError("missing value", line_no, key);
      if (!doc.entries_.emplace(key, Entry{value, line_no, false}).second)
        throw ParseError("duplicate key", line_no, key);
      if (nl == std::string::npos) break;
    }
    return doc;
  }

  // returns the value and marks the key consumed
  std::optional<std::pair<std::string, int>> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.consumed = true;
    return std::make_pair(it->second.value, it->second.line);
  }

  void reject_unconsumed() const {
    const Entry* first = nullptr;
    const std::string* key = nullptr;
    for (const auto& [k, e] : entries_)
      if (!e.consumed && (first == nullptr || e.line < first->line)) {
        first = &e;
        key = &k;
      }
    if (first != nullptr) throw ParseError("unknown key", first->line, *key);
  }

 private:
  std::map<std::string, Entry> entries_;
};

inline double read_double(const std::string& value, int line, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ParseError("expected a number, got `" + value + "`", line, key);
  }
  if (used != value.size())
    throw ParseError("trailing characters after number `" + value + "`", line, key);
  return out;
}

inline long long read_int(const std::string& value, int line, const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got `" + value + "`", line, key);
  }
  if (used != value.size())
    throw ParseError("trailing characters after integer `" + value + "`", line, key);
  return out;
}

inline std::uint64_t read_seed(const std::string& value, int line, const std::string& key) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw ParseError("expected a nonnegative integer, got `" + value + "`", line, key);
  }
  if (used != value.size() || value.find('-') != std::string::npos)
    throw ParseError("expected a nonnegative integer, got `" + value + "`", line, key);
  return out;
}

inline bool read_bool(const std::string& value, int line, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ParseError("expected true or false, got `" + value + "`", line, key);
}

inline Axis read_axis(const std::string& value, int line, const std::string& key) {
  if (value == "x") return Axis::X;
  if (value == "y") return Axis::Y;
  if (value == "z") return Axis::Z;
  throw ParseError("expected x, y, or z, got `" + value + "`", line, key);
}

// pst | uniform:<v> | explicit:<v1,v2,...>
inline CouplingProfile read_profile(const std::string& value, int line,
                                    const std::string& key) {
  if (value == "pst") return CouplingProfile::pst();
  const auto colon = value.find(':');
  const std::string head = colon == std::string::npos ? value : value.substr(0, colon);
  if (head == "uniform") {
    if (colon == std::string::npos)
      throw ParseError("uniform profile needs a value, e.g. uniform:1.0", line, key);
    return CouplingProfile::uniform(read_double(trim(value.substr(colon + 1)), line, key));
  }
  if (head == "explicit") {
    if (colon == std::string::npos)
      throw ParseError("explicit profile needs values, e.g. explicit:1,2", line, key);
    std::vector<double> vals;
    for (const auto& tok : split_list(value.substr(colon + 1))) {
      if (tok.empty()) throw ParseError("empty entry in coupling list", line, key);
      vals.push_back(read_double(tok, line, key));
    }
    return CouplingProfile::explicit_values(std::move(vals));
  }
  throw ParseError("expected pst, uniform:<v>, or explicit:<v1,...>, got `" + value + "`",
                   line, key);
}

inline std::string format_double(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace detail

// 12 significant digits, the precision promised for CSV values
inline std::string csv_number(double v) { return detail::format_double(v, "%.12g"); }

inline Scenario parse_scenario(const std::string& text) {
  using detail::read_axis;
  using detail::read_bool;
  using detail::read_double;
  using detail::read_int;
  using detail::read_profile;

  auto doc = detail::KvDoc::parse(text);
  Scenario s;

  // name doubles as the output file stem
  {
    auto name = doc.take("name");
    if (!name) throw ParseError("missing required key `name`", 0, "name");
    s.name = name->first;
    if (s.name.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.") !=
        std::string::npos)
      throw ParseError("name may use letters, digits, `_`, `-`, `.` only", name->second,
                       "name");
  }

  // model block
  {
    auto fam = doc.take("model.family");
    if (!fam) throw ParseError("missing required key `model.family`", 0, "model.family");
    if (fam->first == "ising") s.model.family = Family::Ising;
    else if (fam->first == "xy") s.model.family = Family::XY;
    else if (fam->first == "xy_gamma") s.model.family = Family::XYGamma;
    else if (fam->first == "ising_nnn") s.model.family = Family::IsingNNN;
    else
      throw ParseError("expected ising, xy, xy_gamma, or ising_nnn, got `" + fam->first +
                           "`",
                       fam->second, "model.family");

    auto n = doc.take("model.n_sites");
    if (!n) throw ParseError("missing required key `model.n_sites`", 0, "model.n_sites");
    const long long nv = read_int(n->first, n->second, "model.n_sites");
    if (nv < 2 || nv > 12)
      throw ParseError("n_sites must be between 2 and 12 (dense simulation)", n->second,
                       "model.n_sites");
    s.model.n_sites = static_cast<int>(nv);

    auto jx = doc.take("model.jx");
    if (!jx) throw ParseError("missing required key `model.jx`", 0, "model.jx");
    try {
      s.model.jx = read_profile(jx->first, jx->second, "model.jx")
                       .expand(s.model.n_sites, s.model.n_sites - 1);
    } catch (const ModelError& e) {
      throw ParseError(e.what(), jx->second, "model.jx");
    }

    auto jy = doc.take("model.jy");
    if (s.model.family == Family::XY) {
      if (!jy)
        throw ParseError("missing required key `model.jy` (family xy)", 0, "model.jy");
      try {
        s.model.jy = read_profile(jy->first, jy->second, "model.jy")
                         .expand(s.model.n_sites, s.model.n_sites - 1);
      } catch (const ModelError& e) {
        throw ParseError(e.what(), jy->second, "model.jy");
      }
    } else if (jy) {
      throw ParseError("model.jy is only meaningful for family xy", jy->second,
                       "model.jy");
    }

    auto gamma = doc.take("model.gamma");
    if (s.model.family == Family::XYGamma) {
      if (!gamma)
        throw ParseError("missing required key `model.gamma` (family xy_gamma)", 0,
                         "model.gamma");
      s.model.gamma = read_double(gamma->first, gamma->second, "model.gamma");
    } else if (gamma) {
      throw ParseError("model.gamma is only meaningful for family xy_gamma",
                       gamma->second, "model.gamma");
    }

    auto l_nnn = doc.take("model.l_nnn");
    if (s.model.family == Family::IsingNNN) {
      if (!l_nnn)
        throw ParseError("missing required key `model.l_nnn` (family ising_nnn)", 0,
                         "model.l_nnn");
      try {
        s.model.l_nnn = read_profile(l_nnn->first, l_nnn->second, "model.l_nnn")
                            .expand(s.model.n_sites, s.model.n_sites - 2);
      } catch (const ModelError& e) {
        throw ParseError(e.what(), l_nnn->second, "model.l_nnn");
      }
    } else if (l_nnn) {
      throw ParseError("model.l_nnn is only meaningful for family ising_nnn",
                       l_nnn->second, "model.l_nnn");
    }
  }

  // drive block: amplitude either directly (drive.g) or calibrated from the
  // requested Bessel weight (drive.target_weight)
  {
    auto axis = doc.take("drive.axis");
    auto omega = doc.take("drive.omega");
    auto g = doc.take("drive.g");
    auto target = doc.take("drive.target_weight");
    const bool any = axis || omega || g || target;
    if (any) {
      if (!axis) throw ParseError("drive block needs `drive.axis`", 0, "drive.axis");
      if (!omega) throw ParseError("drive block needs `drive.omega`", 0, "drive.omega");
      DriveSpec d;
      d.axis = read_axis(axis->first, axis->second, "drive.axis");
      d.omega = read_double(omega->first, omega->second, "drive.omega");
      if (d.omega <= 0.0)
        throw ParseError("drive.omega must be positive", omega->second, "drive.omega");
      if (g && target)
        throw ParseError("give either drive.g or drive.target_weight, not both",
                         target->second, "drive.target_weight");
      if (!g && !target)
        throw ParseError("drive block needs drive.g or drive.target_weight", 0,
                         "drive.g");
      if (g) {
        d.g = read_double(g->first, g->second, "drive.g");
      } else {
        const double a = read_double(target->first, target->second,
                                     "drive.target_weight");
        try {
          d.g = calibrate_drive(a, d.omega);
        } catch (const CalibrationError& e) {
          throw ParseError(e.what(), target->second, "drive.target_weight");
        }
      }
      s.drive = d;
    }
  }

  // noise block: activated by any noise.* key or by a noisy run below
  {
    auto axes = doc.take("noise.axes");
    auto sigma = doc.take("noise.sigma");
    auto mu = doc.take("noise.mu");
    auto tau = doc.take("noise.tau");
    auto trials = doc.take("noise.trials");
    auto seed = doc.take("noise.seed");
    const bool any = axes || sigma || mu || tau || trials || seed;
    if (any) {
      if (!axes) throw ParseError("noise block needs `noise.axes`", 0, "noise.axes");
      NoiseSpec spec;
      spec.axes.clear();
      for (const auto& tok : detail::split_list(axes->first)) {
        const Axis a = read_axis(tok, axes->second, "noise.axes");
        for (Axis seen : spec.axes)
          if (seen == a)
            throw ParseError("duplicate axis `" + tok + "`", axes->second, "noise.axes");
        spec.axes.push_back(a);
      }
      if (spec.axes.empty())
        throw ParseError("noise.axes must list at least one axis", axes->second,
                         "noise.axes");
      if (sigma) {
        spec.sigma = read_double(sigma->first, sigma->second, "noise.sigma");
        if (spec.sigma < 0.0)
          throw ParseError("noise.sigma must be nonnegative", sigma->second,
                           "noise.sigma");
      }
      if (mu) spec.mu = read_double(mu->first, mu->second, "noise.mu");
      if (tau) {
        spec.tau = read_double(tau->first, tau->second, "noise.tau");
        if (spec.tau <= 0.0)
          throw ParseError("noise.tau must be positive", tau->second, "noise.tau");
      }
      if (trials) {
        const long long t = read_int(trials->first, trials->second, "noise.trials");
        if (t < 1)
          throw ParseError("noise.trials must be at least 1", trials->second,
                           "noise.trials");
        if (t > 100000)
          throw ParseError("noise.trials is implausibly large", trials->second,
                           "noise.trials");
        spec.trials = static_cast<int>(t);
      }
      if (seed) spec.master_seed = detail::read_seed(seed->first, seed->second, "noise.seed");
      s.noise = spec;
    }
  }

  // task block
  {
    auto task = doc.take("task");
    if (task) {
      if (task->first == "transfer") s.task = TaskKind::Transfer;
      else if (task->first == "concurrence") s.task = TaskKind::Concurrence;
      else
        throw ParseError("expected transfer or concurrence, got `" + task->first + "`",
                         task->second, "task");
    }
    auto basis = doc.take("task.basis");
    if (basis) {
      s.task_basis = read_axis(basis->first, basis->second, "task.basis");
      if (s.task_basis == Axis::X)
        throw ParseError("task.basis supports z or y", basis->second, "task.basis");
    }
    auto pair = doc.take("task.pair");
    if (s.task == TaskKind::Concurrence) {
      s.pair_a = 1;
      s.pair_b = s.model.n_sites;
      if (pair) {
        const auto toks = detail::split_list(pair->first);
        if (toks.size() != 2)
          throw ParseError("task.pair needs two sites, e.g. 1,2", pair->second,
                           "task.pair");
        const long long a = read_int(toks[0], pair->second, "task.pair");
        const long long b = read_int(toks[1], pair->second, "task.pair");
        if (a < 1 || a > s.model.n_sites || b < 1 || b > s.model.n_sites || a == b)
          throw ParseError("task.pair sites must be distinct and within the chain",
                           pair->second, "task.pair");
        s.pair_a = static_cast<int>(a);
        s.pair_b = static_cast<int>(b);
      }
    } else if (pair) {
      throw ParseError("task.pair is only meaningful for the concurrence task",
                       pair->second, "task.pair");
    }
    auto avg = doc.take("task.averaging");
    if (avg) {
      if (s.task != TaskKind::Concurrence)
        throw ParseError("task.averaging is only meaningful for the concurrence task",
                         avg->second, "task.averaging");
      if (avg->first == "per_trial") s.averaging = AveragingMode::PerTrial;
      else if (avg->first == "state") s.averaging = AveragingMode::AveragedState;
      else
        throw ParseError("expected per_trial or state, got `" + avg->first + "`",
                         avg->second, "task.averaging");
    }
  }

  // grid block
  {
    auto kind = doc.take("grid.kind");
    if (kind) {
      if (kind->first == "stroboscopic") s.grid_kind = GridKind::Stroboscopic;
      else if (kind->first == "uniform") s.grid_kind = GridKind::Uniform;
      else
        throw ParseError("expected stroboscopic or uniform, got `" + kind->first + "`",
                         kind->second, "grid.kind");
    } else {
      s.grid_kind = s.drive ? GridKind::Stroboscopic : GridKind::Uniform;
    }

    auto horizon = doc.take("grid.horizon");
    if (!horizon)
      throw ParseError("missing required key `grid.horizon`", 0, "grid.horizon");
    s.horizon = read_double(horizon->first, horizon->second, "grid.horizon");
    if (s.horizon <= 0.0)
      throw ParseError("grid.horizon must be positive", horizon->second, "grid.horizon");

    auto start = doc.take("grid.start");
    auto points = doc.take("grid.points");
    if (s.grid_kind == GridKind::Stroboscopic) {
      if (!s.drive)
        throw ParseError("a stroboscopic grid needs a drive block", 0, "grid.kind");
      if (start)
        throw ParseError("grid.start is only meaningful for uniform grids",
                         start->second, "grid.start");
      if (points)
        throw ParseError("grid.points is only meaningful for uniform grids",
                         points->second, "grid.points");
      const double period = 2.0 * std::numbers::pi / s.drive->omega;
      if (s.horizon < period)
        throw ParseError("horizon shorter than one drive period", horizon->second,
                         "grid.horizon");
    } else {
      if (start) {
        s.grid_start = read_double(start->first, start->second, "grid.start");
        if (s.grid_start < 0.0 || s.grid_start >= s.horizon)
          throw ParseError("grid.start must lie in [0, horizon)", start->second,
                           "grid.start");
      }
      if (points) {
        const long long p = read_int(points->first, points->second, "grid.points");
        if (p < 2 || p > 1000000)
          throw ParseError("grid.points must be between 2 and 1000000", points->second,
                           "grid.points");
        s.grid_points = static_cast<int>(p);
      }
    }
  }

  // propagator block
  {
    auto steps = doc.take("propagator.steps_per_period");
    if (steps) {
      const long long v = read_int(steps->first, steps->second,
                                   "propagator.steps_per_period");
      if (v < 16 || v % 2 != 0)
        throw ParseError("steps_per_period must be even and at least 16", steps->second,
                         "propagator.steps_per_period");
      s.propagator.steps_per_period = static_cast<int>(v);
    }
    auto tol = doc.take("propagator.convergence_tol");
    if (tol) {
      s.propagator.convergence_tol = read_double(tol->first, tol->second,
                                                 "propagator.convergence_tol");
      if (s.propagator.convergence_tol <= 0.0)
        throw ParseError("convergence_tol must be positive", tol->second,
                         "propagator.convergence_tol");
    }
    auto check = doc.take("propagator.check_convergence");
    if (check)
      s.propagator.check_convergence = read_bool(check->first, check->second,
                                                 "propagator.check_convergence");
  }

  // runs: explicit list, or the single mode implied by which blocks exist
  {
    auto runs = doc.take("runs");
    if (runs) {
      for (const auto& tok : detail::split_list(runs->first)) {
        RunMode mode;
        if (tok == "driven") mode = RunMode::Driven;
        else if (tok == "effective") mode = RunMode::Effective;
        else if (tok == "undriven") mode = RunMode::Undriven;
        else if (tok == "noisy_driven") mode = RunMode::NoisyDriven;
        else if (tok == "noisy_effective") mode = RunMode::NoisyEffective;
        else if (tok == "noisy_undriven") mode = RunMode::NoisyUndriven;
        else
          throw ParseError("unknown run mode `" + tok + "`", runs->second, "runs");
        for (RunMode seen : s.runs)
          if (seen == mode)
            throw ParseError("duplicate run mode `" + tok + "`", runs->second, "runs");
        s.runs.push_back(mode);
      }
      if (s.runs.empty())
        throw ParseError("runs must list at least one mode", runs->second, "runs");
      for (RunMode mode : s.runs) {
        const bool needs_drive = mode == RunMode::Driven || mode == RunMode::Effective ||
                                 mode == RunMode::NoisyDriven ||
                                 mode == RunMode::NoisyEffective;
        const bool needs_noise = mode == RunMode::NoisyDriven ||
                                 mode == RunMode::NoisyEffective ||
                                 mode == RunMode::NoisyUndriven;
        if (needs_drive && !s.drive)
          throw ParseError("run mode `" + run_mode_name(mode) + "` needs a drive block",
                           runs->second, "runs");
        if (needs_noise && !s.noise)
          throw ParseError("run mode `" + run_mode_name(mode) + "` needs a noise block",
                           runs->second, "runs");
      }
    } else {
      if (s.drive && s.noise) s.runs = {RunMode::NoisyDriven};
      else if (s.drive) s.runs = {RunMode::Driven};
      else if (s.noise) s.runs = {RunMode::NoisyUndriven};
      else s.runs = {RunMode::Undriven};
    }
  }

  doc.reject_unconsumed();

  try {
    validate_model(s.model);
  } catch (const ModelError& e) {
    throw ParseError(e.what(), 0, "model");
  }
  return s;
}

// canonical serialization of a resolved scenario; full double precision so
// that parse(emit(s)) reproduces s exactly
inline std::string emit_resolved_scenario(const Scenario& s) {
  auto num = [](double v) { return detail::format_double(v, "%.17g"); };
  auto profile = [&num](const std::vector<double>& v) {
    std::string out = "explicit:";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) out += ",";
      out += num(v[i]);
    }
    return out;
  };
  std::string out;
  out += "name = " + s.name + "\n";
  out += "model.family = " + family_name(s.model.family) + "\n";
  out += "model.n_sites = " + std::to_string(s.model.n_sites) + "\n";
  out += "model.jx = " + profile(s.model.jx) + "\n";
  if (s.model.family == Family::XY) out += "model.jy = " + profile(s.model.jy) + "\n";
  if (s.model.family == Family::XYGamma)
    out += "model.gamma = " + num(s.model.gamma) + "\n";
  if (s.model.family == Family::IsingNNN)
    out += "model.l_nnn = " + profile(s.model.l_nnn) + "\n";
  if (s.drive) {
    out += "drive.axis = " + axis_name(s.drive->axis) + "\n";
    out += "drive.omega = " + num(s.drive->omega) + "\n";
    out += "drive.g = " + num(s.drive->g) + "\n";
  }
  if (s.noise) {
    std::string axes;
    for (std::size_t i = 0; i < s.noise->axes.size(); ++i) {
      if (i > 0) axes += ",";
      axes += axis_name(s.noise->axes[i]);
    }
    out += "noise.axes = " + axes + "\n";
    out += "noise.sigma = " + num(s.noise->sigma) + "\n";
    out += "noise.mu = " + num(s.noise->mu) + "\n";
    out += "noise.tau = " + num(s.noise->tau) + "\n";
    out += "noise.trials = " + std::to_string(s.noise->trials) + "\n";
    out += "noise.seed = " + std::to_string(s.noise->master_seed) + "\n";
  }
  out += std::string("task = ") +
         (s.task == TaskKind::Transfer ? "transfer" : "concurrence") + "\n";
  out += "task.basis = " + axis_name(s.task_basis) + "\n";
  if (s.task == TaskKind::Concurrence) {
    out += "task.pair = " + std::to_string(s.pair_a) + "," + std::to_string(s.pair_b) +
           "\n";
    out += std::string("task.averaging = ") +
           (s.averaging == AveragingMode::PerTrial ? "per_trial" : "state") + "\n";
  }
  out += std::string("grid.kind = ") +
         (s.grid_kind == GridKind::Stroboscopic ? "stroboscopic" : "uniform") + "\n";
  out += "grid.horizon = " + num(s.horizon) + "\n";
  if (s.grid_kind == GridKind::Uniform) {
    out += "grid.start = " + num(s.grid_start) + "\n";
    out += "grid.points = " + std::to_string(s.grid_points) + "\n";
  }
  out += "propagator.steps_per_period = " + std::to_string(s.propagator.steps_per_period) +
         "\n";
  out += "propagator.convergence_tol = " + num(s.propagator.convergence_tol) + "\n";
  out += std::string("propagator.check_convergence = ") +
         (s.propagator.check_convergence ? "true" : "false") + "\n";
  std::string runs;
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    if (i > 0) runs += ",";
    runs += run_mode_name(s.runs[i]);
  }
  out += "runs = " + runs + "\n";
  return out;
}

namespace detail {

template <class Fn>
auto with_run_label(const std::string& label, Fn&& fn) {
  const std::string prefix = "run `" + label + "`: ";
  try {
    return fn();
  } catch (const UnsupportedTransform& e) {
    throw UnsupportedTransform(prefix + e.what());
  } catch (const NotExcitationConserving& e) {
    throw NotExcitationConserving(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const CalibrationError& e) {
    throw CalibrationError(prefix + e.what());
  } catch (const ModelError& e) {
    throw ModelError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

inline std::vector<double> transfer_series(const std::vector<State>& states,
                                           const State& target) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& psi : states) out.push_back(fidelity(psi, target));
  return out;
}

inline std::vector<double> transfer_series(const std::vector<Density>& rhos,
                                           const State& target) {
  std::vector<double> out;
  out.reserve(rhos.size());
  for (const auto& rho : rhos) out.push_back(fidelity(rho, target));
  return out;
}

inline std::vector<double> concurrence_values(const std::vector<State>& states, int a,
                                              int b) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& psi : states)
    out.push_back(concurrence(partial_trace_to_pair(psi, a, b)));
  return out;
}

}  // namespace detail

inline std::vector<RunRecord> run_scenario(const Scenario& s) {
  validate_model(s.model);
  if (s.runs.empty()) throw ConfigError("scenario lists no runs");

  const TimeGrid grid = s.grid_kind == GridKind::Stroboscopic
                            ? stroboscopic_times(s.drive->omega, s.horizon)
                            : uniform_grid(s.grid_start, s.horizon, s.grid_points);
  const TransferTask task = end_transfer_task(s.model.n_sites, s.task_basis);
  const State psi0 = task.initial;
  const Operator h_static = build_static_hamiltonian(s.model);

  auto observe_pure = [&](const EvolutionResult& r) {
    return s.task == TaskKind::Transfer
               ? detail::transfer_series(r.states, task.target)
               : detail::concurrence_values(r.states, s.pair_a, s.pair_b);
  };
  auto observe_noisy = [&](const NoisyEvolutionResult& r) {
    if (s.task == TaskKind::Transfer)
      return detail::transfer_series(r.averaged, task.target);
    if (s.averaging == AveragingMode::AveragedState) {
      std::vector<double> out;
      out.reserve(r.averaged.size());
      for (const auto& rho : r.averaged)
        out.push_back(concurrence(partial_trace_to_pair(rho, s.pair_a, s.pair_b)));
      return out;
    }
    // per-trial: concurrence of each trajectory, then the plain average
    std::vector<double> out(r.grid.samples.size(), 0.0);
    for (const auto& trial : r.trials) {
      const auto vals = detail::concurrence_values(trial, s.pair_a, s.pair_b);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += vals[k];
    }
    for (double& v : out) v /= static_cast<double>(r.trials.size());
    return out;
  };

  std::vector<RunRecord> records;
  records.reserve(s.runs.size());
  for (RunMode mode : s.runs) {
    RunRecord rec;
    rec.scenario = s.name;
    rec.label = run_mode_name(mode);
    rec.grid = grid;
    if (s.noise) rec.seed = s.noise->master_seed;
    const auto t0 = std::chrono::steady_clock::now();
    detail::with_run_label(rec.label, [&] {
      switch (mode) {
        case RunMode::Driven: {
          const auto r = evolve_driven(s.model, *s.drive, psi0, grid, s.propagator);
          rec.values = observe_pure(r);
          rec.converged = r.meta.converged;
          rec.high_frequency = r.meta.high_frequency;
          break;
        }
        case RunMode::Effective: {
          const auto r = evolve_constant(effective_hamiltonian(s.model, *s.drive), psi0,
                                         grid);
          rec.values = observe_pure(r);
          break;
        }
        case RunMode::Undriven: {
          const auto r = evolve_constant(h_static, psi0, grid);
          rec.values = observe_pure(r);
          break;
        }
        case RunMode::NoisyDriven: {
          const auto r = evolve_noisy(s.model, s.drive, *s.noise, psi0, grid,
                                      s.propagator);
          rec.values = observe_noisy(r);
          rec.converged = r.meta.converged;
          rec.high_frequency = r.meta.high_frequency;
          break;
        }
        case RunMode::NoisyEffective: {
          const auto r = evolve_noisy(effective_hamiltonian(s.model, *s.drive),
                                      std::nullopt, *s.noise, psi0, grid, s.propagator);
          rec.values = observe_noisy(r);
          break;
        }
        case RunMode::NoisyUndriven: {
          const auto r = evolve_noisy(s.model, std::nullopt, *s.noise, psi0, grid,
                                      s.propagator);
          rec.values = observe_noisy(r);
          break;
        }
      }
    });
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(std::move(rec));
  }
  return records;
}

// Writes one CSV per grid (merged columns when every run shares the grid,
// one file per run otherwise) plus a sidecar holding the resolved scenario.
// Returns the paths written.  Timing is reported by the caller, never
// written to disk, so repeated runs stay byte-identical.
inline std::vector<std::string> emit_csv(const Scenario& s,
                                         const std::vector<RunRecord>& records,
                                         const std::string& destination) {
  if (records.empty()) throw ConfigError("nothing to emit: no run records");
  for (const auto& rec : records)
    if (rec.values.size() != rec.grid.samples.size())
      throw ShapeError("run `" + rec.label + "` columns misaligned with its grid");

  namespace fs = std::filesystem;
  const fs::path dir(destination);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory `" + destination +
                  "`: " + ec.message());

  auto write_file = [](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write `" + path.string() + "`");
  };

  std::vector<std::string> written;
  const bool shared_grid = [&] {
    for (const auto& rec : records)
      if (rec.grid.samples != records.front().grid.samples) return false;
    return true;
  }();

  if (shared_grid) {
    std::string csv = "t";
    for (const auto& rec : records) csv += "," + rec.label;
    csv += "\n";
    const auto& t = records.front().grid.samples;
    for (std::size_t k = 0; k < t.size(); ++k) {
      csv += csv_number(t[k]);
      for (const auto& rec : records) csv += "," + csv_number(rec.values[k]);
      csv += "\n";
    }
    const fs::path path = dir / (s.name + ".csv");
    write_file(path, csv);
    written.push_back(path.string());
  } else {
    for (const auto& rec : records) {
      std::string csv = "t," + rec.label + "\n";
      for (std::size_t k = 0; k < rec.grid.samples.size(); ++k)
        csv += csv_number(rec.grid.samples[k]) + "," + csv_number(rec.values[k]) + "\n";
      const fs::path path = dir / (s.name + "_" + rec.label + ".csv");
      write_file(path, csv);
      written.push_back(path.string());
    }
  }

  std::string sidecar = "# resolved scenario\n# library version: ";
  sidecar += library_version;
  sidecar += "\n";
  for (const auto& rec : records) {
    sidecar += "# run " + rec.label + ": converged=";
    sidecar += rec.converged ? "true" : "false";
    sidecar += " high_frequency=";
    sidecar += rec.high_frequency ? "true" : "false";
    sidecar += " seed=" + std::to_string(rec.seed) + "\n";
  }
  sidecar += emit_resolved_scenario(s);
  const fs::path meta = dir / (s.name + ".resolved.scn");
  write_file(meta, sidecar);
  written.push_back(meta.string());
  return written;
}

}  // namespace spinchain
