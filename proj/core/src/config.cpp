#include "cavfeed/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cavfeed/csv.hpp"
#include "cavfeed/fock.hpp"

namespace cavfeed {

namespace {

constexpr double kPi = ExperimentSpec::kPi;

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr std::array<KindName, 9> kKindNames{{
    {ExperimentKind::steady_state, "steady_state"},
    {ExperimentKind::phase_diagram, "phase_diagram"},
    {ExperimentKind::intensity, "intensity"},
    {ExperimentKind::g2, "g2"},
    {ExperimentKind::accuracy_time, "accuracy_time"},
    {ExperimentKind::accuracy_photon, "accuracy_photon"},
    {ExperimentKind::scaling_fit, "scaling_fit"},
    {ExperimentKind::oracle_validate, "oracle_validate"},
    {ExperimentKind::kraus_demo, "kraus_demo"},
}};

[[noreturn]] void fail_at(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct Entry {
  std::string key;
  std::string value;
  int line;
};

/// Splits the text into key/value entries; enforces comment, section, and
/// duplicate-key rules. Section headers are validated but organizational.
std::vector<Entry> tokenize(const std::string& text) {
  std::vector<Entry> entries;
  std::unordered_map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
    std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.size() < 3 || s.back() != ']')
        fail_at(line, "malformed section header '" + s + "'");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      fail_at(line, "expected 'key = value', got '" + s + "'");
    std::string key = lower(trim(std::string_view(s).substr(0, eq)));
    std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) fail_at(line, "empty key");
    if (value.empty()) fail_at(line, "empty value for key '" + key + "'");
    if (auto it = seen.find(key); it != seen.end())
      fail_at(line, "duplicate key '" + key + "' (first set on line " +
                        std::to_string(it->second) + ")");
    seen.emplace(key, line);
    entries.push_back({std::move(key), std::move(value), line});
  }
  return entries;
}

double parse_double(const Entry& e) {
  const std::string& v = e.value;
  double out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_at(e.line, "value for '" + e.key + "' is not a number: '" + v + "'");
  return out;
}

double parse_finite(const Entry& e) {
  double v = parse_double(e);
  if (!std::isfinite(v))
    fail_at(e.line, "value for '" + e.key + "' must be finite");
  return v;
}

long long parse_int(const Entry& e) {
  const std::string& v = e.value;
  long long out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_at(e.line, "value for '" + e.key + "' is not an integer: '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const Entry& e) {
  const std::string& v = e.value;
  std::uint64_t out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_at(e.line, "value for '" + e.key +
                        "' is not a non-negative integer: '" + v + "'");
  return out;
}

bool parse_bool(const Entry& e) {
  std::string v = lower(e.value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail_at(e.line, "value for '" + e.key + "' must be true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = v.find(',', start);
    if (pos == std::string::npos) {
      parts.push_back(trim(std::string_view(v).substr(start)));
      break;
    }
    parts.push_back(trim(std::string_view(v).substr(start, pos - start)));
    start = pos + 1;
  }
  return parts;
}

std::vector<double> parse_list(const Entry& e) {
  std::vector<double> out;
  for (const std::string& part : split_list(e.value)) {
    if (part.empty())
      fail_at(e.line, "empty element in list for '" + e.key + "'");
    double v{};
    auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (res.ec != std::errc{} || res.ptr != part.data() + part.size() ||
        !std::isfinite(v))
      fail_at(e.line, "list element for '" + e.key + "' is not a number: '" +
                          part + "'");
    out.push_back(v);
  }
  return out;
}

Complex parse_complex(const Entry& e) {
  auto parts = split_list(e.value);
  if (parts.empty() || parts.size() > 2)
    fail_at(e.line, "value for '" + e.key + "' must be RE or RE,IM");
  double comps[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    auto res = std::from_chars(p.data(), p.data() + p.size(), comps[i]);
    if (p.empty() || res.ec != std::errc{} ||
        res.ptr != p.data() + p.size() || !std::isfinite(comps[i]))
      fail_at(e.line, "value for '" + e.key + "' has a malformed component: '" +
                          p + "'");
  }
  return Complex(comps[0], comps[1]);
}

/// Option keys only meaningful for specific kinds; using one elsewhere is
/// almost certainly a config mistake and is rejected.
bool option_key_allowed(ExperimentKind kind, const std::string& key) {
  auto in = [&](std::initializer_list<ExperimentKind> kinds) {
    return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
  };
  using K = ExperimentKind;
  if (key == "sweep") return in({K::phase_diagram, K::accuracy_photon});
  if (key == "times") return in({K::phase_diagram, K::oracle_validate});
  if (key == "forced") return in({K::phase_diagram});
  if (key == "dphi" || key == "signal" || key == "uncertainty" ||
      key == "stencil" || key == "bootstrap_replicas")
    return in({K::accuracy_time, K::accuracy_photon});
  if (key == "window_min" || key == "window_max")
    return in({K::accuracy_photon});
  if (key == "input") return in({K::scaling_fit});
  if (key == "fit_min" || key == "fit_max") return in({K::scaling_fit});
  if (key == "dim" || key == "oracle_dt" || key == "leak_threshold")
    return in({K::oracle_validate});
  if (key == "kraus_n") return in({K::kraus_demo});
  return true;  // generic key, everywhere
}

bool is_known_key(const std::string& key) {
  static const std::array<std::string_view, 33> known = {
      "preset",         "kind",        "phi",
      "alpha_sq",       "eta",         "kappa",
      "beta",           "seed",        "trajectories",
      "t_max",          "dt",          "mode",
      "sample_stride",  "max_feedback_events",
      "workers",        "out",         "sweep",
      "times",          "forced",      "dphi",
      "signal",         "uncertainty", "stencil",
      "bootstrap_replicas",            "fit_min",
      "fit_max",        "window_min",  "window_max",
      "input",          "dim",         "oracle_dt",
      "leak_threshold", "kraus_n",
  };
  return std::find(known.begin(), known.end(), key) != known.end();
}

[[noreturn]] void fail_range(const Entry& e, const std::string& what) {
  fail_at(e.line, "value for '" + e.key + "' " + what + " (got '" + e.value +
                      "')");
}

void apply_entry(ExperimentSpec& spec, const Entry& e) {
  const std::string& k = e.key;
  // Angles arrive in units of pi and are stored in radians immediately, so
  // later validation passes never rescale them.
  if (k == "phi") {
    spec.params.phi = parse_finite(e) * kPi;
  } else if (k == "alpha_sq") {
    double v = parse_finite(e);
    if (v < 0) fail_range(e, "must be >= 0");
    spec.alpha_sq = v;
  } else if (k == "eta") {
    double v = parse_finite(e);
    if (v < 0 || v > 1) fail_range(e, "must lie in [0, 1]");
    spec.params.eta = v;
  } else if (k == "kappa") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.params.kappa = v;
  } else if (k == "beta") {
    spec.params.beta = parse_complex(e);
    spec.beta_explicit = true;
  } else if (k == "seed") {
    spec.config.master_seed = parse_u64(e);
  } else if (k == "trajectories") {
    long long v = parse_int(e);
    if (v < 1) fail_range(e, "must be >= 1");
    spec.config.n_traj = static_cast<std::size_t>(v);
  } else if (k == "t_max") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.config.t_max = v;
  } else if (k == "dt") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.config.dt = v;
  } else if (k == "mode") {
    std::string v = lower(e.value);
    if (v == "fixed")
      spec.config.mode = SteppingMode::fixed_step;
    else if (v == "event")
      spec.config.mode = SteppingMode::event_driven;
    else
      fail_range(e, "must be 'fixed' or 'event'");
  } else if (k == "sample_stride") {
    long long v = parse_int(e);
    if (v < 1) fail_range(e, "must be >= 1");
    spec.config.sample_stride = static_cast<int>(v);
  } else if (k == "max_feedback_events") {
    long long v = parse_int(e);
    if (v < 1) fail_range(e, "must be >= 1");
    spec.config.max_feedback_events = static_cast<std::size_t>(v);
  } else if (k == "workers") {
    long long v = parse_int(e);
    if (v < 0) fail_range(e, "must be >= 0 (0 = automatic)");
    spec.workers = static_cast<int>(v);
  } else if (k == "out") {
    spec.output_path = e.value;
  } else if (k == "sweep") {
    spec.sweep = parse_list(e);
    if (spec.kind == ExperimentKind::phase_diagram)
      for (double& phi : spec.sweep) phi *= kPi;
  } else if (k == "times") {
    auto v = parse_list(e);
    for (double t : v)
      if (t < 0) fail_range(e, "must contain only times >= 0");
    spec.times = std::move(v);
  } else if (k == "forced") {
    spec.forced_feedback = parse_bool(e);
  } else if (k == "dphi") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.dphi = v * kPi;
  } else if (k == "signal") {
    std::string v = lower(e.value);
    if (v == "auto")
      spec.signal = SignalChoice::automatic;
    else if (v == "intensity")
      spec.signal = SignalChoice::intensity;
    else if (v == "g2")
      spec.signal = SignalChoice::g2;
    else
      fail_range(e, "must be 'intensity', 'g2', or 'auto'");
  } else if (k == "uncertainty") {
    std::string v = lower(e.value);
    if (v == "auto")
      spec.uncertainty = UncertaintyChoice::automatic;
    else if (v == "single_shot")
      spec.uncertainty = UncertaintyChoice::single_shot;
    else if (v == "bootstrap")
      spec.uncertainty = UncertaintyChoice::bootstrap;
    else
      fail_range(e, "must be 'single_shot', 'bootstrap', or 'auto'");
  } else if (k == "stencil") {
    std::string v = lower(e.value);
    if (v == "auto")
      spec.stencil = StencilChoice::automatic;
    else if (v == "centered")
      spec.stencil = StencilChoice::centered;
    else if (v == "backward")
      spec.stencil = StencilChoice::backward;
    else
      fail_range(e, "must be 'centered', 'backward', or 'auto'");
  } else if (k == "bootstrap_replicas") {
    long long v = parse_int(e);
    if (v < 2) fail_range(e, "must be >= 2");
    spec.bootstrap_replicas = static_cast<int>(v);
  } else if (k == "fit_min") {
    double v = parse_finite(e);
    if (v < 0) fail_range(e, "must be >= 0");
    spec.fit_min = v;
  } else if (k == "fit_max") {
    double v = parse_double(e);
    if (std::isnan(v) || v <= 0) fail_range(e, "must be > 0");
    spec.fit_max = v;
  } else if (k == "window_min") {
    double v = parse_finite(e);
    if (v < 0) fail_range(e, "must be >= 0");
    spec.window_min = v;
  } else if (k == "window_max") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.window_max = v;
  } else if (k == "input") {
    spec.input_path = e.value;
  } else if (k == "dim") {
    long long v = parse_int(e);
    if (v != 0 && v < 2) fail_range(e, "must be 0 (automatic) or >= 2");
    spec.fock_dim = static_cast<int>(v);
  } else if (k == "oracle_dt") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.oracle_dt = v;
  } else if (k == "leak_threshold") {
    double v = parse_finite(e);
    if (v <= 0) fail_range(e, "must be > 0");
    spec.leak_threshold = v;
  } else if (k == "kraus_n") {
    long long v = parse_int(e);
    if (v < 1 || v > 20) fail_range(e, "must lie in [1, 20]");
    spec.kraus_n = static_cast<int>(v);
  } else {
    fail_at(e.line, "unhandled key '" + k + "'");  // unreachable
  }
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

std::optional<ExperimentKind> kind_from_name(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  return std::nullopt;
}

ExperimentSpec parse_config(const std::string& text) {
  std::vector<Entry> entries = tokenize(text);

  ExperimentSpec spec;
  // Built-in defaults equal the paper-default preset (|alpha_ss|^2 = 4,
  // eta = 0.5, 10^6 trajectories); naming it is an explicit confirmation.
  spec.params.eta = 0.5;
  spec.params.phi = kPi;

  const Entry* kind_entry = nullptr;
  for (const Entry& e : entries) {
    if (!is_known_key(e.key)) fail_at(e.line, "unknown key '" + e.key + "'");
    if (e.key == "preset") {
      if (lower(e.value) != "paper-default")
        fail_range(e, "must be 'paper-default'");
    } else if (e.key == "kind") {
      auto k = kind_from_name(lower(e.value));
      if (!k) {
        std::string names;
        for (const auto& kn : kKindNames) {
          if (!names.empty()) names += ", ";
          names += kn.name;
        }
        fail_at(e.line, "unknown kind '" + e.value + "' (expected one of: " +
                            names + ")");
      }
      spec.kind = *k;
      kind_entry = &e;
    }
  }
  if (!kind_entry) throw ConfigError("missing required key: kind");

  for (const Entry& e : entries) {
    if (e.key == "preset" || e.key == "kind") continue;
    if (!option_key_allowed(spec.kind, e.key))
      fail_at(e.line, "key '" + e.key + "' does not apply to kind '" +
                          std::string(kind_name(spec.kind)) + "'");
    apply_entry(spec, e);
  }

  validate_spec(spec);
  return spec;
}

ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

SignalKind resolved_signal(const ExperimentSpec& spec) {
  switch (spec.signal) {
    case SignalChoice::intensity:
      return SignalKind::intensity;
    case SignalChoice::g2:
      return SignalKind::g2;
    case SignalChoice::automatic:
      break;
  }
  // Time scans default to the intensity signal; the photon-number scan
  // is defined through the correlation signal.
  return spec.kind == ExperimentKind::accuracy_photon ? SignalKind::g2
                                                      : SignalKind::intensity;
}

UncertaintyMode resolved_uncertainty(const ExperimentSpec& spec) {
  switch (spec.uncertainty) {
    case UncertaintyChoice::single_shot:
      return UncertaintyMode::single_shot;
    case UncertaintyChoice::bootstrap:
      return UncertaintyMode::bootstrap;
    case UncertaintyChoice::automatic:
      break;
  }
  return default_uncertainty(resolved_signal(spec));
}

StencilKind resolved_stencil(const ExperimentSpec& spec) {
  switch (spec.stencil) {
    case StencilChoice::centered:
      return StencilKind::centered;
    case StencilChoice::backward:
      return StencilKind::backward;
    case StencilChoice::automatic:
      break;
  }
  if (spec.kind == ExperimentKind::accuracy_photon) {
    // The photon scan rebuilds params per sweep value with a real kick,
    // so the stencil choice depends only on phi and eta.
    return default_stencil(params_for_alpha_sq(1.0, spec.params.phi,
                                               spec.params.eta,
                                               spec.params.kappa));
  }
  return default_stencil(spec.params);
}

void validate_spec(ExperimentSpec& spec) {
  using K = ExperimentKind;

  // Derive the driving strength from the target steady-state photon number
  // and fill the default kick amplitude.
  spec.params.omega = spec.params.kappa * std::sqrt(spec.alpha_sq);
  if (!spec.beta_explicit)
    spec.params.beta = Complex(std::sqrt(spec.alpha_sq), 0.0);

  try {
    spec.params = validated(spec.params);
  } catch (const std::exception& err) {
    throw ConfigError(std::string("invalid parameters: ") + err.what());
  }

  const bool runs_ensembles =
      spec.kind == K::phase_diagram || spec.kind == K::intensity ||
      spec.kind == K::g2 || spec.kind == K::accuracy_time ||
      spec.kind == K::accuracy_photon || spec.kind == K::oracle_validate;

  if (runs_ensembles) {
    // Validate against the parameters the ensembles will actually step
    // with: cross-validation keeps the drive on while every other kind
    // steps the undriven measurement stage, where event mode is legal.
    const bool driven_stepping = spec.kind == K::oracle_validate;
    try {
      validate_run(driven_stepping ? spec.params
                                   : measurement_params(spec.params),
                   spec.config);
    } catch (const std::exception& err) {
      throw ConfigError(std::string("invalid run configuration: ") +
                        err.what());
    }
  }

  if (spec.fit_min >= spec.fit_max)
    throw ConfigError("fit_min must be smaller than fit_max");
  if (spec.window_min >= spec.window_max)
    throw ConfigError("window_min must be smaller than window_max");

  // Kind-specific defaults and checks.
  switch (spec.kind) {
    case K::phase_diagram: {
      if (spec.sweep.empty()) {
        for (int i = 0; i <= 20; ++i)
          spec.sweep.push_back((0.5 + 0.05 * i) * ExperimentSpec::kPi);
      }
      if (spec.times.empty()) spec.times = {0.0, 0.5, 1.0};
      break;
    }
    case K::accuracy_photon: {
      if (spec.sweep.empty()) spec.sweep = {1.0, 2.0, 3.0, 4.0, 6.0, 9.0};
      for (double v : spec.sweep)
        if (v <= 0)
          throw ConfigError("accuracy_photon sweep values must be > 0");
      break;
    }
    case K::oracle_validate: {
      if (spec.times.empty()) spec.times = {0.1, 0.5, 1.0};
      break;
    }
    case K::scaling_fit: {
      if (spec.input_path.empty())
        throw ConfigError(
            "scaling_fit requires input = <path to an accuracy CSV>");
      break;
    }
    case K::kraus_demo:
    case K::steady_state:
    case K::intensity:
    case K::g2:
    case K::accuracy_time:
      break;
  }

  // Snapshot times must land on the sampling grid and inside the run.
  if (spec.kind == K::phase_diagram || spec.kind == K::oracle_validate) {
    TimeGrid grid = make_grid(spec.config);
    for (double t : spec.times) {
      if (t > spec.config.t_max * (1 + 1e-9))
        throw ConfigError("snapshot time " + format_number(t) +
                          " exceeds t_max");
      double edges = t / grid.sample_dt;
      if (std::abs(edges - std::llround(edges)) > 1e-6)
        throw ConfigError("snapshot time " + format_number(t) +
                          " is not on the sampling grid (spacing " +
                          format_number(grid.sample_dt) + ")");
    }
  }

  if (spec.kind == K::oracle_validate && spec.fock_dim == 0) {
    spec.fock_dim =
        std::max(suggested_dim(spec.alpha_sq), 64);
  }

  const bool writes_csv =
      spec.kind != K::steady_state && spec.kind != K::kraus_demo;
  if (writes_csv && spec.output_path.empty())
    spec.output_path = std::string(kind_name(spec.kind)) + ".csv";
}

}  // namespace cavfeed
