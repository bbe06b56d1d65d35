#include "nvens/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "nvens/error.hpp"

namespace nvens {

namespace {

using json = nlohmann::ordered_json;

// Reads a JSON object strictly: every visited key must exist, and every present key must
// have been visited by the time `finish` runs.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + display() + "' must be an object");
  }

  template <class T>
  void field(const char* key, T& out) {
    const json& v = take(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw ConfigError("");
        }
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
        out = v.get<T>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      throw ConfigError("config key '" + name(key) + "' has the wrong type or range");
    }
  }

  void field(const char* key, Vec3& out) {
    const json& v = take(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
      throw ConfigError("config key '" + name(key) + "' must be an array of 3 numbers");
    out = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    const double n = norm(out);
    if (!(n > 0.0)) throw ConfigError("config key '" + name(key) + "' must be a non-zero vector");
    out = (1.0 / n) * out;
  }

  void field(const char* key, std::filesystem::path& out) {
    std::string s;
    field(key, s);
    out = s;
  }

  void field(const char* key, std::optional<std::filesystem::path>& out) {
    const json& v = take(key);
    if (v.is_null()) {
      out.reset();
    } else if (v.is_string()) {
      out = v.get<std::string>();
    } else {
      throw ConfigError("config key '" + name(key) + "' must be a path string or null");
    }
  }

  void field(const char* key, ensemble::DbConvention& out) {
    std::string s;
    field(key, s);
    try {
      out = ensemble::parse_db_convention(s);
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + name(key) + "': " + e.what());
    }
  }

  void field(const char* key, protocols::Protocol& out) {
    std::string s;
    field(key, s);
    try {
      out = protocols::parse_protocol(s);
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + name(key) + "': " + e.what());
    }
  }

  template <class F>
  void section(const char* key, F&& body) {
    Reader child(take(key), name(key));
    body(child);
    child.finish();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + name(k.c_str()) + "'");
  }

 private:
  const json& take(const char* key) {
    if (!j_.contains(key)) throw ConfigError("missing config key '" + name(key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <class T>
  void field(const char* key, T& v) {
    j_[key] = v;
  }
  void field(const char* key, Vec3& v) { j_[key] = {v.x, v.y, v.z}; }
  void field(const char* key, std::filesystem::path& v) { j_[key] = v.string(); }
  void field(const char* key, std::optional<std::filesystem::path>& v) {
    j_[key] = v ? json(v->string()) : json(nullptr);
  }
  void field(const char* key, ensemble::DbConvention& v) { j_[key] = ensemble::to_string(v); }
  void field(const char* key, protocols::Protocol& v) { j_[key] = protocols::to_string(v); }

  template <class F>
  void section(const char* key, F&& body) {
    json child;
    Writer w(child);
    body(w);
    j_[key] = std::move(child);
  }

 private:
  json& j_;
};

template <class IO>
void visit(IO& io, RunConfig& c) {
  io.field("seed", c.seed);
  io.field("output_dir", c.output_dir);
  io.field("db_convention", c.db);
  io.field("field_import", c.field_import);
  io.section("grid", [&](IO& s) {
    s.field("width_mm", c.grid.width_mm);
    s.field("height_mm", c.grid.height_mm);
    s.field("nx", c.grid.nx);
    s.field("ny", c.grid.ny);
  });
  io.section("antenna", [&](IO& s) {
    s.field("loop_radius_mm", c.antenna.loop_radius_mm);
    s.field("trace_width_mm", c.antenna.trace_width_mm);
    s.field("feed_gap_mm", c.antenna.feed_gap_mm);
    s.field("drive_current_A", c.antenna.drive_current_A);
    s.field("evaluation_height_mm", c.antenna.evaluation_height_mm);
    s.field("segments", c.antenna.segments);
    s.field("nv_axis", c.frame.axis);
    s.field("drive_scale", c.drive_scale);
  });
  io.field("protocol", c.protocol.protocol);
  io.section("ramsey", [&](IO& s) {
    auto& r = c.protocol.ramsey;
    s.field("gamma_e", r.gamma_e);
    s.field("T2_star_s", r.T2_star);
    s.field("p", r.p);
    s.field("tau_s", r.tau);
    s.field("contrast", r.C);
    s.field("n_avg", r.n_avg);
  });
  io.section("echo", [&](IO& s) {
    auto& r = c.protocol.echo;
    s.field("gamma_e", r.gamma_e);
    s.field("T2_star_s", r.T2_star);
    s.field("T2_s", r.T2);
    s.field("p", r.p);
    s.field("tau_s", r.tau);
    s.field("contrast", r.C);
    s.field("n_avg", r.n_avg);
  });
  io.section("cw", [&](IO& s) {
    auto& r = c.protocol.cw;
    s.field("gamma_e", r.gamma_e);
    s.field("Gamma1", r.Gamma1);
    s.field("Gamma2_star", r.Gamma2_star);
    s.field("Gamma_p_max", r.Gamma_p_max);
    s.field("Gamma_c_max", r.Gamma_c_max);
    s.field("R_max", r.R_max);
    s.field("a_over_b", r.a_over_b);
    s.field("omega_center", r.omega_center);
  });
  io.section("rate_model", [&](IO& s) {
    s.field("R_MHz", c.rates.R);
    s.field("gamma_MHz", c.rates.gamma);
    s.field("S0_MHz", c.rates.S0);
    s.field("S1_MHz", c.rates.S1);
    s.field("D0_MHz", c.rates.D0);
    s.field("D1_MHz", c.rates.D1);
    s.field("t_readout_us", c.window.t_readout_us);
    s.field("step_us", c.window.step_us);
  });
  io.section("penalty", [&](IO& s) {
    s.field("mean_intensity", c.penalty.mean_intensity);
    s.field("nonuniformity", c.penalty.nonuniformity);
    s.field("i_sat", c.penalty.i_sat);
    s.field("sensors", c.penalty.sensors);
  });
  io.section("holography", [&](IO& s) {
    auto& o = c.optics;
    s.field("slm_pixels", o.slm_pixels);
    s.field("map_fraction", o.map_fraction);
    s.field("iterations", o.synthesis.iterations);
    s.field("m", o.synthesis.m);
    s.field("beam_waist_px", o.synthesis.beam_waist_px);
    s.field("guard_px", o.synthesis.guard_px);
    s.field("aberration_rms_rad", o.aberration_rms_rad);
    s.section("feedback", [&](IO& f) {
      f.field("iterations", o.feedback.iterations);
      f.field("gain", o.feedback.gain);
      f.field("mraf_steps", o.feedback.mraf_steps);
      f.field("clamp_lo", o.feedback.clamp_lo);
      f.field("clamp_hi", o.feedback.clamp_hi);
    });
  });
  io.section("mc", [&](IO& s) {
    s.field("shots", c.mc.shots);
    s.field("fd_fraction", c.mc.fd_fraction);
    s.field("streams", c.mc.streams);
  });
}

}  // namespace

void RunConfig::validate() const {
  try {
    grid.validate();
    antenna.validate();
    frame.validate();
    switch (protocol.protocol) {
      case protocols::Protocol::ramsey: protocol.ramsey.validate(); break;
      case protocols::Protocol::echo: protocol.echo.validate(); break;
      case protocols::Protocol::cw: protocol.cw.validate(); break;
    }
    rates.validate();
    window.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(drive_scale > 0.0)) throw ConfigError("antenna.drive_scale must be positive");
  if (!(penalty.mean_intensity > 0.0) || !(penalty.nonuniformity >= 0.0) || !(penalty.i_sat > 0.0) ||
      penalty.sensors == 0)
    throw ConfigError("penalty settings out of range");
  if (optics.slm_pixels < 8) throw ConfigError("holography.slm_pixels must be >= 8");
  if (!(optics.map_fraction > 0.0) || optics.map_fraction > 1.0)
    throw ConfigError("holography.map_fraction must lie in (0, 1]");
  if (!(optics.synthesis.m > 0.0) || optics.synthesis.m > 1.0) throw ConfigError("holography.m must lie in (0, 1]");
  if (optics.synthesis.iterations < 0 || optics.feedback.iterations < 0 || optics.feedback.mraf_steps < 0)
    throw ConfigError("holography iteration counts must be >= 0");
  if (!(optics.synthesis.beam_waist_px > 0.0)) throw ConfigError("holography.beam_waist_px must be positive");
  if (mc.shots < 1000) throw ConfigError("mc.shots must be >= 1000");
  if (mc.streams == 0 || !(mc.fd_fraction > 0.0)) throw ConfigError("mc settings out of range");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j, "");
  visit(r, c);
  r.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  RunConfig c = cfg;
  json j;
  Writer w(j);
  visit(w, c);
  return j.dump(2) + "\n";
}

}  // namespace nvens
