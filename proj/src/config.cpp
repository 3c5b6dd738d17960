#include "enkbf/config.hpp"

#include "enkbf/csv.hpp"
#include "enkbf/errors.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace enkbf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::string joined(const std::vector<std::string>& msgs) {
    std::string out;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        if (i) out += '\n';
        out += msgs[i];
    }
    return out;
}

// Collects parse problems; values are only committed on clean conversion.
struct ParseCtx {
    std::vector<std::string> errors;
    int line = 0;
    std::string current_key;  // names the key in value-conversion errors

    void fail(const std::string& msg) {
        errors.push_back("line " + std::to_string(line) + ": " + msg);
    }

    void fail_value(const std::string& msg) {
        fail(current_key.empty() ? msg : current_key + ": " + msg);
    }

    bool to_double(const std::string& text, double& out) {
        const std::string t = trim(text);
        if (t.empty()) return fail_value("empty value"), false;
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size() || !std::isfinite(v))
            return fail_value("not a number: '" + t + "'"), false;
        out = v;
        return true;
    }

    bool to_int(const std::string& text, int& out) {
        const std::string t = trim(text);
        if (t.empty()) return fail_value("empty value"), false;
        char* end = nullptr;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size() || v < INT_MIN || v > INT_MAX)
            return fail_value("not an integer: '" + t + "'"), false;
        out = static_cast<int>(v);
        return true;
    }

    bool to_u64(const std::string& text, std::uint64_t& out) {
        const std::string t = trim(text);
        if (t.empty() || t[0] == '-') return fail_value("not a non-negative integer: '" + t + "'"), false;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size())
            return fail_value("not a non-negative integer: '" + t + "'"), false;
        out = v;
        return true;
    }

    bool to_bool(const std::string& text, bool& out) {
        const std::string t = trim(text);
        if (t == "true") return out = true, true;
        if (t == "false") return out = false, true;
        return fail_value("expected true or false, got '" + t + "'"), false;
    }

    bool to_double_list(const std::string& text, std::vector<double>& out) {
        std::vector<double> vals;
        const std::string body = trim(text);
        if (body.empty()) return fail_value("empty list"), false;
        for (const std::string& item : split(body, ',')) {
            double v;
            if (!to_double(item, v)) return false;
            vals.push_back(v);
        }
        out = std::move(vals);
        return true;
    }

    bool to_int_list(const std::string& text, std::vector<int>& out) {
        std::vector<int> vals;
        const std::string body = trim(text);
        if (body.empty()) return fail_value("empty list"), false;
        for (const std::string& item : split(body, ',')) {
            int v;
            if (!to_int(item, v)) return false;
            vals.push_back(v);
        }
        out = std::move(vals);
        return true;
    }

    bool one_of(const std::string& key, const std::string& value,
                std::initializer_list<const char*> allowed) {
        for (const char* a : allowed)
            if (value == a) return true;
        std::string opts;
        for (const char* a : allowed) {
            if (!opts.empty()) opts += " | ";
            opts += a;
        }
        fail(key + ": expected one of " + opts + ", got '" + value + "'");
        return false;
    }
};

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Signal: return "signal";
        case ExperimentKind::Enkbf: return "enkbf";
        case ExperimentKind::KalmanBucy: return "kalman-bucy";
        case ExperimentKind::Coupling: return "coupling";
        case ExperimentKind::Sweep: return "sweep";
        case ExperimentKind::ExpMoment: return "expmoment";
        case ExperimentKind::Fpf: return "fpf";
        case ExperimentKind::Unset: break;
    }
    return "";
}

ExperimentKind parse_kind(const std::string& text) {
    for (ExperimentKind k :
         {ExperimentKind::Signal, ExperimentKind::Enkbf,
          ExperimentKind::KalmanBucy, ExperimentKind::Coupling,
          ExperimentKind::Sweep, ExperimentKind::ExpMoment,
          ExperimentKind::Fpf}) {
        if (text == to_string(k)) return k;
    }
    return ExperimentKind::Unset;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    ParseCtx ctx;
    std::vector<std::string> seen;  // "<section>.<key>" duplicate tracking
    std::string section;
    std::istringstream input(text);
    std::string raw;
    while (std::getline(input, raw)) {
        ++ctx.line;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                ctx.fail("malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"model",    "observation", "numerics",
                                          "ensemble", "init",        "fpf"};
            if (std::find(std::begin(known), std::end(known), section) ==
                std::end(known)) {
                ctx.fail("unknown section [" + section + "]");
                section = "!";  // swallow keys of the bad section
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            ctx.fail("expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            ctx.fail("empty key");
            continue;
        }
        ctx.current_key = key;
        if (section == "!") continue;
        const std::string qual = section + "." + key;
        if (std::find(seen.begin(), seen.end(), qual) != seen.end()) {
            ctx.fail("duplicate key '" + key + "'");
            continue;
        }
        seen.push_back(qual);

        bool known_key = true;
        if (section.empty()) {
            if (key == "kind") {
                const ExperimentKind k = parse_kind(value);
                if (k == ExperimentKind::Unset)
                    ctx.fail("unknown kind '" + value + "'");
                else
                    cfg.kind = k;
            } else if (key == "seed") {
                ctx.to_u64(value, cfg.seed);
            } else if (key == "out") {
                if (value.empty())
                    ctx.fail("out: empty path");
                else
                    cfg.out = value;
            } else {
                known_key = false;
            }
        } else if (section == "model") {
            ModelBlock& m = cfg.model;
            if (key == "modes") ctx.to_int(value, m.modes);
            else if (key == "drift") {
                if (ctx.one_of("drift", value, {"heat", "allen-cahn", "linear"}))
                    m.drift = value;
            }
            else if (key == "ac_a") ctx.to_double(value, m.ac_a);
            else if (key == "ac_b") ctx.to_double(value, m.ac_b);
            else if (key == "ac_c") ctx.to_double(value, m.ac_c);
            else if (key == "linear_diag") ctx.to_double_list(value, m.linear_diag);
            else if (key == "q_alpha") ctx.to_double(value, m.q_alpha);
            else if (key == "q_tau") ctx.to_double(value, m.q_tau);
            else known_key = false;
        } else if (section == "observation") {
            ObservationBlock& o = cfg.observation;
            if (key == "kind") {
                if (ctx.one_of("kind", value, {"linear", "tanh"})) o.kind = value;
            }
            else if (key == "indices") ctx.to_int_list(value, o.indices);
            else if (key == "saturation") ctx.to_double(value, o.saturation);
            else if (key == "gamma") ctx.to_double(value, o.gamma);
            else known_key = false;
        } else if (section == "numerics") {
            NumericsBlock& n = cfg.numerics;
            if (key == "dt") ctx.to_double(value, n.dt);
            else if (key == "horizon") ctx.to_double(value, n.horizon);
            else if (key == "tame") ctx.to_bool(value, n.tame);
            else known_key = false;
        } else if (section == "ensemble") {
            EnsembleBlock& e = cfg.ensemble;
            if (key == "particles") ctx.to_int(value, e.particles);
            else if (key == "replicates") ctx.to_int(value, e.replicates);
            else if (key == "clip") ctx.to_double(value, e.clip);
            else if (key == "n_list") ctx.to_int_list(value, e.n_list);
            else if (key == "p") ctx.to_double(value, e.p);
            else if (key == "oracle_particles") ctx.to_int(value, e.oracle_particles);
            else if (key == "coupling") {
                if (ctx.one_of("coupling", value, {"exact", "oracle"}))
                    e.coupling = value;
            }
            else if (key == "q") ctx.to_double(value, e.q);
            else known_key = false;
        } else if (section == "init") {
            InitBlock& i = cfg.init;
            if (key == "mean") ctx.to_double_list(value, i.mean);
            else if (key == "var") ctx.to_double(value, i.var);
            else known_key = false;
        } else if (section == "fpf") {
            FpfBlock& f = cfg.fpf;
            if (key == "particles") ctx.to_int(value, f.particles);
            else if (key == "bpf_particles") ctx.to_int(value, f.bpf_particles);
            else if (key == "f") {
                if (ctx.one_of("f", value, {"double-well", "linear"})) f.f = value;
            }
            else if (key == "f_a") ctx.to_double(value, f.f_a);
            else if (key == "h") {
                if (ctx.one_of("h", value, {"tanh", "linear"})) f.h = value;
            }
            else if (key == "h_scale") ctx.to_double(value, f.h_scale);
            else if (key == "b") ctx.to_double(value, f.b);
            else if (key == "gamma") ctx.to_double(value, f.gamma);
            else if (key == "init_mean") ctx.to_double(value, f.init_mean);
            else if (key == "init_var") ctx.to_double(value, f.init_var);
            else known_key = false;
        }
        if (!known_key) {
            const std::string where =
                section.empty() ? "top level" : "[" + section + "]";
            ctx.fail("unknown key '" + key + "' in " + where);
        }
    }
    if (!ctx.errors.empty()) throw validation_error(joined(ctx.errors));
    return cfg;
}

namespace {

bool uses_spde_model(ExperimentKind kind) {
    return kind != ExperimentKind::Fpf;
}

bool uses_observation(ExperimentKind kind) {
    return kind != ExperimentKind::Signal && kind != ExperimentKind::Fpf;
}

bool uses_ensemble(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Enkbf:
        case ExperimentKind::Coupling:
        case ExperimentKind::Sweep:
        case ExperimentKind::ExpMoment:
            return true;
        default:
            return false;
    }
}

bool linear_gauss_capable(const ExperimentConfig& cfg) {
    return (cfg.model.drift == "heat" || cfg.model.drift == "linear") &&
           cfg.observation.kind == "linear";
}

// "" resolves to exact when the model admits it, else oracle.
std::string resolved_coupling(const ExperimentConfig& cfg) {
    if (!cfg.ensemble.coupling.empty()) return cfg.ensemble.coupling;
    return linear_gauss_capable(cfg) ? "exact" : "oracle";
}

int max_sweep_size(const EnsembleBlock& e) {
    int m = 0;
    for (int n : e.n_list) m = std::max(m, n);
    return m;
}

bool grid_divides(double dt, double T) {
    if (!(dt > 0.0) || !(T > 0.0)) return false;
    const long long n = std::llround(T / dt);
    return n >= 1 && std::abs(double(n) * dt - T) <= 1e-12 * std::max(T, 1.0);
}

} // namespace

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> errs;
    auto err = [&](const std::string& m) { errs.push_back(m); };

    if (cfg.kind == ExperimentKind::Unset) {
        err("kind: required (set it in the file or via the CLI subcommand)");
        return errs;
    }
    const ExperimentKind kind = cfg.kind;

    if (!(cfg.numerics.dt > 0.0)) err("numerics.dt: must be > 0");
    if (!(cfg.numerics.horizon > 0.0)) err("numerics.horizon: must be > 0");
    if (cfg.numerics.dt > 0.0 && cfg.numerics.horizon > 0.0 &&
        !grid_divides(cfg.numerics.dt, cfg.numerics.horizon))
        err("numerics.horizon: must be an integer multiple of dt");

    if (uses_spde_model(kind)) {
        const ModelBlock& m = cfg.model;
        if (m.modes < 1) err("model.modes: required, must be >= 1");
        if (m.drift == "allen-cahn" && m.ac_a < 0.0)
            err("model.ac_a: cubic coefficient must be >= 0");
        if (m.drift == "linear") {
            if (m.linear_diag.empty())
                err("model.linear_diag: required for drift = linear");
            else if (m.modes >= 1 &&
                     static_cast<int>(m.linear_diag.size()) != m.modes)
                err("model.linear_diag: length must equal modes");
        }
        if (!(m.q_alpha > 0.5)) err("model.q_alpha: must be > 1/2");
        if (!(m.q_tau > 0.0)) err("model.q_tau: must be > 0");

        const InitBlock& i = cfg.init;
        if (m.modes >= 1 && static_cast<int>(i.mean.size()) > m.modes)
            err("init.mean: more entries than modes");
        if (i.var < 0.0) err("init.var: must be >= 0");
    }

    if (uses_observation(kind)) {
        const ObservationBlock& o = cfg.observation;
        if (o.indices.empty()) err("observation.indices: at least one index");
        for (int idx : o.indices)
            if (idx < 1 || (cfg.model.modes >= 1 && idx > cfg.model.modes)) {
                err("observation.indices: entries must lie in [1, modes]");
                break;
            }
        if (o.kind == "tanh" && !(o.saturation > 0.0))
            err("observation.saturation: must be > 0 for tanh observations");
        if (!(o.gamma > 0.0))
            err("observation.gamma: must be > 0 (filters need invertible noise)");
    }

    if (uses_ensemble(kind)) {
        const EnsembleBlock& e = cfg.ensemble;
        if (kind != ExperimentKind::Sweep && e.particles < 2)
            err("ensemble.particles: must be >= 2");
        if (e.replicates < 1) err("ensemble.replicates: must be >= 1");
        if (e.clip < 0.0) err("ensemble.clip: must be >= 0");
    }

    switch (kind) {
        case ExperimentKind::KalmanBucy:
            if (uses_spde_model(kind) && !linear_gauss_capable(cfg))
                err("kalman-bucy: requires a linear drift family and linear "
                    "observations");
            break;
        case ExperimentKind::Coupling:
        case ExperimentKind::Sweep: {
            if (!cfg.ensemble.coupling.empty() &&
                cfg.ensemble.coupling == "exact" && !linear_gauss_capable(cfg))
                err("ensemble.coupling: exact mode requires a linear drift "
                    "family and linear observations");
            const bool oracle = resolved_coupling(cfg) == "oracle";
            const int n_max = kind == ExperimentKind::Sweep
                                  ? max_sweep_size(cfg.ensemble)
                                  : cfg.ensemble.particles;
            if (oracle && cfg.ensemble.oracle_particles <= 4 * n_max)
                err("ensemble.oracle_particles: must exceed 4 * the largest "
                    "ensemble size");
            if (cfg.init.var != 0.0)
                err("init.var: must be 0 for coupling experiments (particles "
                    "and copies share the initial state)");
            if (kind == ExperimentKind::Sweep) {
                if (cfg.ensemble.n_list.size() < 3)
                    err("ensemble.n_list: insufficient design, need at least 3 "
                        "ensemble sizes");
                for (int n : cfg.ensemble.n_list)
                    if (n < 2) {
                        err("ensemble.n_list: entries must be >= 2");
                        break;
                    }
                if (!(cfg.ensemble.p > 0.0)) err("ensemble.p: must be > 0");
            }
            break;
        }
        case ExperimentKind::ExpMoment:
            if (cfg.ensemble.q < 0.0) err("ensemble.q: must be >= 0");
            if (cfg.ensemble.replicates < 2)
                err("ensemble.replicates: expmoment needs at least 2");
            if (cfg.init.var != 0.0)
                err("init.var: must be 0 for expmoment (the bound assumes a "
                    "deterministic initial ensemble)");
            break;
        case ExperimentKind::Fpf: {
            const FpfBlock& f = cfg.fpf;
            if (f.particles < 10) err("fpf.particles: must be >= 10");
            if (f.bpf_particles != 0 && f.bpf_particles < 10)
                err("fpf.bpf_particles: must be 0 (same as particles) or >= 10");
            if (f.b < 0.0) err("fpf.b: must be >= 0");
            if (!(f.gamma > 0.0)) err("fpf.gamma: must be > 0");
            if (!(f.init_var > 0.0)) err("fpf.init_var: must be > 0");
            break;
        }
        default:
            break;
    }
    return errs;
}

ExperimentConfig load_config(const std::string& path) {
    const ExperimentConfig cfg = parse_config_text(io::read_text_file(path));
    const std::vector<std::string> errs = validate_config(cfg);
    if (!errs.empty()) throw validation_error(joined(errs));
    return cfg;
}

namespace {

using KV = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) { return io::format_double(v); }

std::string list_of(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += num(v[i]);
    }
    return out;
}

std::string list_of(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

void emit_section(std::string& out, const std::string& name, KV kv) {
    std::sort(kv.begin(), kv.end());
    out += "\n[" + name + "]\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
}

KV model_kv(const ExperimentConfig& cfg) {
    const ModelBlock& m = cfg.model;
    KV kv{{"modes", std::to_string(m.modes)},
          {"drift", m.drift},
          {"q_alpha", num(m.q_alpha)},
          {"q_tau", num(m.q_tau)}};
    if (m.drift == "allen-cahn") {
        kv.emplace_back("ac_a", num(m.ac_a));
        kv.emplace_back("ac_b", num(m.ac_b));
        kv.emplace_back("ac_c", num(m.ac_c));
    }
    if (m.drift == "linear") kv.emplace_back("linear_diag", list_of(m.linear_diag));
    return kv;
}

KV observation_kv(const ExperimentConfig& cfg) {
    const ObservationBlock& o = cfg.observation;
    KV kv{{"kind", o.kind},
          {"indices", list_of(o.indices)},
          {"gamma", num(o.gamma)}};
    if (o.kind == "tanh") kv.emplace_back("saturation", num(o.saturation));
    return kv;
}

KV numerics_kv(const ExperimentConfig& cfg) {
    const NumericsBlock& n = cfg.numerics;
    return KV{{"dt", num(n.dt)},
              {"horizon", num(n.horizon)},
              {"tame", n.tame ? "true" : "false"}};
}

KV ensemble_kv(const ExperimentConfig& cfg) {
    const EnsembleBlock& e = cfg.ensemble;
    KV kv{{"replicates", std::to_string(e.replicates)},
          {"clip", num(e.clip)}};
    if (cfg.kind != ExperimentKind::Sweep)
        kv.emplace_back("particles", std::to_string(e.particles));
    if (cfg.kind == ExperimentKind::Coupling || cfg.kind == ExperimentKind::Sweep) {
        const std::string mode = resolved_coupling(cfg);
        kv.emplace_back("coupling", mode);
        if (mode == "oracle")
            kv.emplace_back("oracle_particles",
                            std::to_string(e.oracle_particles));
    }
    if (cfg.kind == ExperimentKind::Sweep) {
        kv.emplace_back("n_list", list_of(e.n_list));
        kv.emplace_back("p", num(e.p));
    }
    if (cfg.kind == ExperimentKind::ExpMoment) kv.emplace_back("q", num(e.q));
    return kv;
}

KV init_kv(const ExperimentConfig& cfg) {
    std::vector<double> mean = cfg.init.mean;
    mean.resize(static_cast<std::size_t>(std::max(cfg.model.modes, 1)), 0.0);
    return KV{{"mean", list_of(mean)}, {"var", num(cfg.init.var)}};
}

KV fpf_kv(const ExperimentConfig& cfg) {
    const FpfBlock& f = cfg.fpf;
    const int bpf = f.bpf_particles == 0 ? f.particles : f.bpf_particles;
    KV kv{{"particles", std::to_string(f.particles)},
          {"bpf_particles", std::to_string(bpf)},
          {"f", f.f},
          {"h", f.h},
          {"b", num(f.b)},
          {"gamma", num(f.gamma)},
          {"init_mean", num(f.init_mean)},
          {"init_var", num(f.init_var)}};
    if (f.f == "linear") kv.emplace_back("f_a", num(f.f_a));
    if (f.h == "linear") kv.emplace_back("h_scale", num(f.h_scale));
    return kv;
}

std::string canonical_body(const ExperimentConfig& cfg, bool include_out) {
    std::string out;
    out += "kind = " + to_string(cfg.kind) + "\n";
    if (include_out) out += "out = " + cfg.out + "\n";
    out += "seed = " + std::to_string(cfg.seed) + "\n";
    if (uses_spde_model(cfg.kind)) emit_section(out, "model", model_kv(cfg));
    if (uses_observation(cfg.kind))
        emit_section(out, "observation", observation_kv(cfg));
    emit_section(out, "numerics", numerics_kv(cfg));
    if (uses_ensemble(cfg.kind)) emit_section(out, "ensemble", ensemble_kv(cfg));
    if (uses_spde_model(cfg.kind)) emit_section(out, "init", init_kv(cfg));
    if (cfg.kind == ExperimentKind::Fpf) emit_section(out, "fpf", fpf_kv(cfg));
    return out;
}

void require_valid(const ExperimentConfig& cfg, const char* what) {
    const std::vector<std::string> errs = validate_config(cfg);
    if (!errs.empty())
        throw validation_error(std::string(what) + " requires a valid config:\n" +
                               joined(errs));
}

} // namespace

std::string canonical_text(const ExperimentConfig& cfg) {
    require_valid(cfg, "canonical_text");
    return canonical_body(cfg, /*include_out=*/true);
}

std::string config_hash(const ExperimentConfig& cfg) {
    require_valid(cfg, "config_hash");
    return io::hash_hex(io::fnv1a64(canonical_body(cfg, /*include_out=*/false)));
}

std::string resolved_coupling_mode(const ExperimentConfig& cfg) {
    return resolved_coupling(cfg);
}

std::string model_hash(const ExperimentConfig& cfg) {
    require_valid(cfg, "model_hash");
    std::string out;
    if (uses_spde_model(cfg.kind)) emit_section(out, "model", model_kv(cfg));
    if (uses_observation(cfg.kind))
        emit_section(out, "observation", observation_kv(cfg));
    emit_section(out, "numerics", numerics_kv(cfg));
    return io::hash_hex(io::fnv1a64(out));
}

ModelSpec build_model(const ExperimentConfig& cfg) {
    ModelSpec model;
    model.basis = make_basis(cfg.model.modes);
    if (cfg.model.drift == "heat") {
        model.drift = DriftModel::heat();
    } else if (cfg.model.drift == "allen-cahn") {
        model.drift =
            DriftModel::allen_cahn(cfg.model.ac_a, cfg.model.ac_b, cfg.model.ac_c);
    } else {
        Eigen::MatrixXd A =
            Eigen::MatrixXd::Zero(cfg.model.modes, cfg.model.modes);
        for (int k = 0; k < cfg.model.modes; ++k) A(k, k) = cfg.model.linear_diag[k];
        model.drift = DriftModel::linear(A);
    }
    model.diffusion = DiffusionModel::identity();
    model.q = make_q_spectrum(cfg.model.modes, cfg.model.q_alpha, cfg.model.q_tau);
    return model;
}

ObservationModel build_observation(const ExperimentConfig& cfg,
                                   const BasisSpec& basis) {
    const ObservationKind kind = cfg.observation.kind == "tanh"
                                     ? ObservationKind::BoundedTanh
                                     : ObservationKind::Linear;
    return ObservationModel::make(kind, basis, cfg.observation.indices,
                                  cfg.observation.saturation,
                                  cfg.observation.gamma);
}

IntegratorConfig build_integrator(const ExperimentConfig& cfg) {
    IntegratorConfig config;
    config.dt = cfg.numerics.dt;
    config.T = cfg.numerics.horizon;
    config.tame_nonlinearity = cfg.numerics.tame;
    return config;
}

SpectralField build_init_mean(const ExperimentConfig& cfg) {
    SpectralField mean = SpectralField::Zero(cfg.model.modes);
    for (std::size_t i = 0;
         i < cfg.init.mean.size() && i < static_cast<std::size_t>(cfg.model.modes);
         ++i)
        mean(static_cast<int>(i)) = cfg.init.mean[i];
    return mean;
}

GainPolicy build_gain_policy(const ExperimentConfig& cfg) {
    return cfg.ensemble.clip > 0.0 ? GainPolicy::clipped(cfg.ensemble.clip)
                                   : GainPolicy::untamed();
}

} // namespace enkbf
