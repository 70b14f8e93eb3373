#include "gaussop/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace gaussop {

using nlohmann::json;

namespace {

const char* const k_scenarios[] = {"bogoliubov", "lossy_trap", "parametric_amplifier", "thermal_equilibrium",
                                   "custom_lindblad"};

bool is_number_pair(const json& j) {
    return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number();
}

cplx parse_scalar(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (is_number_pair(j)) return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(path, "expected a number or a [re, im] pair");
}

double parse_real(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a real number");
    return j.get<double>();
}

CVector parse_vector(const json& j, const std::string& path, Index modes) {
    if (modes == 1 && (j.is_number() || is_number_pair(j))) return CVector::Constant(1, parse_scalar(j, path));
    if (!j.is_array() || static_cast<Index>(j.size()) != modes)
        throw ConfigError(path, "expected an array of " + std::to_string(modes) + " entries");
    CVector v(modes);
    for (Index i = 0; i < modes; ++i) v(i) = parse_scalar(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

// scalar (times identity) or row-major nested array
CMatrix parse_matrix(const json& j, const std::string& path, Index modes) {
    if (j.is_number() || is_number_pair(j))
        return parse_scalar(j, path) * CMatrix::Identity(modes, modes);
    if (!j.is_array() || static_cast<Index>(j.size()) != modes)
        throw ConfigError(path, "expected a scalar or a " + std::to_string(modes) + "x" + std::to_string(modes) + " matrix");
    CMatrix m(modes, modes);
    for (Index r = 0; r < modes; ++r) {
        const json& row = j[r];
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != modes)
            throw ConfigError(rp, "expected a row of " + std::to_string(modes) + " entries");
        for (Index c = 0; c < modes; ++c) m(r, c) = parse_scalar(row[c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path.empty() ? key : path + "." + key, "missing");
    return obj.at(key);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
    }
}

bool hermitian_pair(const CVector& a, const CVector& b) {
    return (b - a.conjugate()).cwiseAbs().maxCoeff() <= 1e-15;
}

bool real_nonneg_diagonal(const CMatrix& x) {
    CMatrix off = x;
    off.diagonal().setZero();
    return max_abs(off) == 0.0 && x.diagonal().imag().cwiseAbs().maxCoeff() == 0.0 &&
           x.diagonal().real().minCoeff() >= 0.0;
}

InitialState parse_initial(const json& j, Index modes) {
    const std::string path = "initial_state";
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    InitialState st;
    st.kind = j.contains("kind") ? j.at("kind").get<std::string>() : "vacuum";
    auto vec = [&](const char* key, const CVector& dflt) {
        return j.contains(key) ? parse_vector(j.at(key), join(path, key), modes) : dflt;
    };
    auto mat = [&](const char* key) { return parse_matrix(require(j, key, path), join(path, key), modes); };
    const CVector zero = CVector::Zero(modes);
    const cplx omega = j.contains("omega") ? parse_scalar(j.at("omega"), join(path, "omega")) : cplx(1.0);

    try {
        if (st.kind == "vacuum") {
            check_keys(j, path, {"kind"});
            st.members.push_back(vacuum(modes));
            st.fock = {{StateKind::vacuum, {}}};
        } else if (st.kind == "coherent") {
            check_keys(j, path, {"kind", "alpha", "beta", "omega"});
            const CVector alpha = vec("alpha", zero);
            const CVector beta = vec("beta", alpha.conjugate());
            st.members.push_back(coherent_projector(omega, alpha, beta));
            if (hermitian_pair(alpha, beta) && omega == 1.0) st.fock = {{StateKind::coherent, {alpha, {}, {}}}};
        } else if (st.kind == "thermal") {
            check_keys(j, path, {"kind", "nbar", "phi", "omega"});
            ThermalSpec spec;
            if (j.contains("phi"))
                spec = ThermalSpec::from_phi(parse_vector(j.at("phi"), join(path, "phi"), modes));
            else
                spec = ThermalSpec::from_nbar(mat("nbar"));
            st.members.push_back(thermal(omega, spec));
            if (real_nonneg_diagonal(spec.nbar) && omega == 1.0) st.fock = {{StateKind::thermal, {{}, spec.nbar, {}}}};
        } else if (st.kind == "squeezed" || st.kind == "squeezed_thermal") {
            const bool with_nbar = st.kind == "squeezed_thermal";
            if (with_nbar)
                check_keys(j, path, {"kind", "xi", "xi_plus", "nbar", "alpha", "alpha_plus"});
            else
                check_keys(j, path, {"kind", "xi", "xi_plus", "alpha", "alpha_plus"});
            const CMatrix xi = mat("xi");
            const CMatrix xi_plus = j.contains("xi_plus") ? mat("xi_plus") : CMatrix(xi.conjugate());
            const CMatrix nbar = with_nbar ? mat("nbar") : CMatrix(CMatrix::Zero(modes, modes));
            const CVector alpha = vec("alpha", zero);
            const CVector alpha_plus = vec("alpha_plus", alpha.conjugate());
            st.members.push_back(squeezed_thermal({xi, xi_plus}, {nbar}, alpha, alpha_plus));
            const bool herm = max_abs(xi_plus - xi.conjugate()) == 0.0 && hermitian_pair(alpha, alpha_plus) &&
                              real_nonneg_diagonal(nbar);
            if (herm) st.fock = {{StateKind::displaced_squeezed_thermal, {alpha, nbar, xi}}};
        } else if (st.kind == "number_ensemble") {
            check_keys(j, path, {"kind", "n0", "r", "K"});
            if (modes != 1) throw ConfigError(join(path, "kind"), "number_ensemble is single-mode");
            const json& n0 = require(j, "n0", path);
            if (!n0.is_number_integer() || n0.get<int>() < 0) throw ConfigError(join(path, "n0"), "expected an integer >= 0");
            const double r = j.contains("r") ? parse_real(j.at("r"), join(path, "r")) : 1.0;
            const int k = j.contains("K") ? j.at("K").get<int>() : 32;
            st.members = number_state_ensemble(n0.get<int>(), r, k).members;
            st.ensemble = true;
        } else if (st.kind == "wigner" || st.kind == "q" || st.kind == "p" || st.kind == "plus_p" ||
                   st.kind == "s_ordered") {
            check_keys(j, path, {"kind", "alpha", "beta", "s", "omega"});
            const CVector alpha = vec("alpha", zero);
            const CVector beta = vec("beta", alpha.conjugate());
            BasisKind bk = BasisKind::wigner;
            double s = 0.0;
            if (st.kind == "q") bk = BasisKind::q;
            if (st.kind == "p") bk = BasisKind::p;
            if (st.kind == "plus_p") bk = BasisKind::plus_p;
            if (st.kind == "s_ordered") {
                bk = BasisKind::s_ordered;
                s = parse_real(require(j, "s", path), join(path, "s"));
            }
            st.members.push_back(classical_basis(bk, alpha, beta, s, omega));
        } else {
            throw ConfigError(join(path, "kind"), "unknown state kind '" + st.kind + "'");
        }
    } catch (const SymmetryError& e) {
        throw ConfigError(path, e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(path, e.what());
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(path, e.what());
    }
    return st;
}

std::vector<double> parse_grid(const json& g, const std::string& path, const char* start_key, const char* end_key) {
    if (!g.is_object()) throw ConfigError(path, "expected an object");
    check_keys(g, path, {start_key, end_key, "samples"});
    const double t0 = g.contains(start_key) ? parse_real(g.at(start_key), join(path, start_key)) : 0.0;
    const double t1 = parse_real(require(g, end_key, path), join(path, end_key));
    const json& ns = require(g, "samples", path);
    if (!ns.is_number_integer() || ns.get<int>() < 1) throw ConfigError(join(path, "samples"), "expected an integer >= 1");
    const int n = ns.get<int>();
    if (n > 1 && !(t1 > t0)) throw ConfigError(join(path, end_key), "grid must be strictly increasing");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
    return out;
}

LindbladSpec wrap_spec(const std::function<LindbladSpec()>& make) {
    try {
        LindbladSpec s = make();
        s.validate();
        return s;
    } catch (const SpecError& e) {
        std::string msg = e.what();
        const std::string prefix = e.field() + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw ConfigError("parameters." + e.field(), msg);
    } catch (const DimensionError& e) {
        throw ConfigError("parameters", e.what());
    }
}

}  // namespace

EngineChoice parse_engine(const std::string& name) {
    if (name == "closed_form") return EngineChoice::closed_form;
    if (name == "ode") return EngineChoice::ode;
    if (name == "oracle") return EngineChoice::oracle;
    if (name == "both") return EngineChoice::both;
    throw ConfigError("engine", "unknown engine '" + name + "'");
}

std::string engine_name(EngineChoice e) {
    switch (e) {
    case EngineChoice::closed_form: return "closed_form";
    case EngineChoice::ode: return "ode";
    case EngineChoice::oracle: return "oracle";
    case EngineChoice::both: return "both";
    }
    return "?";
}

ScenarioConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("(root)", "expected a JSON object");
    check_keys(doc, "", {"name", "scenario", "modes", "parameters", "initial_state", "time_grid", "tau_grid", "engine",
                         "oracle", "tolerance", "output"});
    ScenarioConfig cfg;
    const json& sc = require(doc, "scenario", "");
    if (!sc.is_string()) throw ConfigError("scenario", "expected a string");
    cfg.scenario = sc.get<std::string>();
    bool known = false;
    for (const char* s : k_scenarios) known = known || cfg.scenario == s;
    if (!known) throw ConfigError("scenario", "unknown scenario '" + cfg.scenario + "'");
    cfg.label = doc.contains("name") ? doc.at("name").get<std::string>() : cfg.scenario;
    if (cfg.label.empty() || cfg.label.find('/') != std::string::npos) throw ConfigError("name", "invalid output name");

    if (doc.contains("modes")) {
        const json& m = doc.at("modes");
        if (!m.is_number_integer() || m.get<int>() < 1) throw ConfigError("modes", "expected an integer >= 1");
        cfg.modes = m.get<int>();
    }
    const Index modes = cfg.modes;
    const json params = doc.contains("parameters") ? doc.at("parameters") : json::object();
    if (!params.is_object()) throw ConfigError("parameters", "expected an object");
    auto pmat = [&](const char* key) { return parse_matrix(require(params, key, "parameters"), join("parameters", key), modes); };

    if (cfg.scenario == "bogoliubov") {
        check_keys(params, "parameters", {"chi"});
        const CMatrix chi = pmat("chi");
        if (asymmetry(chi) > 1e-12 * std::max(1.0, max_abs(chi))) throw ConfigError("parameters.chi", "not symmetric");
        cfg.lindblad = wrap_spec([&] { return bogoliubov_lindblad(chi); });
    } else if (cfg.scenario == "lossy_trap") {
        check_keys(params, "parameters", {"omega", "gamma"});
        const CMatrix omega = pmat("omega");
        const CMatrix gamma = pmat("gamma");
        if (max_abs(omega - omega.adjoint()) > 1e-12 * std::max(1.0, max_abs(omega)))
            throw ConfigError("parameters.omega", "not Hermitian");
        cfg.lindblad = wrap_spec([&] { return lossy_trap_lindblad(omega, gamma); });
    } else if (cfg.scenario == "parametric_amplifier") {
        check_keys(params, "parameters", {"chi", "gamma"});
        if (modes != 1) throw ConfigError("modes", "parametric_amplifier is single-mode");
        const cplx chi = parse_scalar(require(params, "chi", "parameters"), "parameters.chi");
        const double gamma = parse_real(require(params, "gamma", "parameters"), "parameters.gamma");
        cfg.lindblad = wrap_spec([&] { return parametric_amplifier_lindblad(chi, gamma); });
    } else if (cfg.scenario == "custom_lindblad") {
        check_keys(params, "parameters", {"H1", "H2", "loss_ops"});
        LindbladSpec spec;
        spec.H1 = params.contains("H1") ? pmat("H1") : CMatrix(CMatrix::Zero(modes, modes));
        spec.H2 = params.contains("H2") ? pmat("H2") : CMatrix(CMatrix::Zero(modes, modes));
        if (params.contains("loss_ops")) {
            const json& ops = params.at("loss_ops");
            if (!ops.is_array()) throw ConfigError("parameters.loss_ops", "expected an array");
            for (std::size_t k = 0; k < ops.size(); ++k) {
                const std::string p = "parameters.loss_ops[" + std::to_string(k) + "]";
                if (!ops[k].is_object()) throw ConfigError(p, "expected an object");
                check_keys(ops[k], p, {"o1", "o2"});
                LossOperator op{CVector::Zero(modes), CVector::Zero(modes)};
                if (ops[k].contains("o1")) op.o1 = parse_vector(ops[k].at("o1"), p + ".o1", modes);
                if (ops[k].contains("o2")) op.o2 = parse_vector(ops[k].at("o2"), p + ".o2", modes);
                spec.loss_ops.push_back(op);
            }
        }
        cfg.lindblad = wrap_spec([&] { return spec; });
    } else {
        check_keys(params, "parameters", {"omega", "tau0"});
        cfg.imaginary_time = true;
        const CVector w = parse_vector(require(params, "omega", "parameters"), "parameters.omega", modes);
        cfg.omega.resize(modes);
        for (Index k = 0; k < modes; ++k) {
            if (w(k).imag() != 0.0 || !(w(k).real() > 0.0))
                throw ConfigError("parameters.omega[" + std::to_string(k) + "]", "must be a positive real number");
            cfg.omega(k) = w(k).real();
        }
        if (params.contains("tau0")) {
            cfg.tau0 = parse_real(params.at("tau0"), "parameters.tau0");
            if (!(cfg.tau0 > 0.0)) throw ConfigError("parameters.tau0", "must be positive");
        }
    }

    if (cfg.imaginary_time) {
        cfg.grid = parse_grid(require(doc, "tau_grid", ""), "tau_grid", "tau_start", "tau_end");
        if (cfg.grid.front() < cfg.tau0) throw ConfigError("tau_grid.tau_start", "must not precede parameters.tau0");
        if (doc.contains("time_grid")) throw ConfigError("time_grid", "thermal_equilibrium uses tau_grid");
        if (doc.contains("initial_state")) {
            cfg.initial = parse_initial(doc.at("initial_state"), modes);
            if (cfg.initial.kind != "thermal")
                throw ConfigError("initial_state.kind", "thermal_equilibrium starts from a thermal kernel at tau0");
        } else {
            cfg.initial.kind = "identity";
        }
    } else {
        cfg.grid = parse_grid(require(doc, "time_grid", ""), "time_grid", "t_start", "t_end");
        if (cfg.grid.front() < 0.0) throw ConfigError("time_grid.t_start", "must be nonnegative");
        if (doc.contains("tau_grid")) throw ConfigError("tau_grid", "only thermal_equilibrium uses tau_grid");
        cfg.initial = parse_initial(doc.contains("initial_state") ? doc.at("initial_state") : json{{"kind", "vacuum"}},
                                    modes);
    }

    if (doc.contains("engine")) {
        if (!doc.at("engine").is_string()) throw ConfigError("engine", "expected a string");
        cfg.engine = parse_engine(doc.at("engine").get<std::string>());
    }
    cfg.nmax = cfg.imaginary_time ? 200 : (modes == 1 ? 40 : (modes == 2 ? 12 : 0));
    if (doc.contains("oracle")) {
        const json& o = doc.at("oracle");
        if (!o.is_object()) throw ConfigError("oracle", "expected an object");
        check_keys(o, "oracle", {"nmax", "edge_threshold", "tail_threshold"});
        if (o.contains("nmax")) {
            if (!o.at("nmax").is_number_integer() || o.at("nmax").get<int>() < 2)
                throw ConfigError("oracle.nmax", "expected an integer >= 2");
            cfg.nmax = o.at("nmax").get<int>();
        }
        if (o.contains("edge_threshold")) cfg.edge_threshold = parse_real(o.at("edge_threshold"), "oracle.edge_threshold");
        if (o.contains("tail_threshold")) cfg.tail_threshold = parse_real(o.at("tail_threshold"), "oracle.tail_threshold");
    }
    if (doc.contains("tolerance")) {
        cfg.tolerance = parse_real(doc.at("tolerance"), "tolerance");
        if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
    }
    if (doc.contains("output")) {
        if (!doc.at("output").is_string()) throw ConfigError("output", "expected a string");
        cfg.output = doc.at("output").get<std::string>();
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(file)", "cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("(file)", std::string("invalid JSON: ") + e.what());
    } catch (const json::type_error& e) {
        throw ConfigError("(file)", e.what());
    }
    try {
        return parse_config(doc);
    } catch (const json::exception& e) {
        throw ConfigError("(config)", e.what());
    }
}

std::string format_number(double v) {
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

json to_json(cplx z) {
    return json::array({z.real() + 0.0, z.imag() + 0.0});
}

json to_json(const CVector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
    return a;
}

json to_json(const CMatrix& m) {
    json a = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        a.push_back(row);
    }
    return a;
}

// flattened moment columns: a_i, adag_i, aa_ij (i<=j), n_ij, adagadag_ij (i<=j)
std::vector<std::string> moment_names(Index modes) {
    std::vector<std::string> n;
    for (Index i = 0; i < modes; ++i) n.push_back("a_" + std::to_string(i));
    for (Index i = 0; i < modes; ++i) n.push_back("adag_" + std::to_string(i));
    for (Index i = 0; i < modes; ++i)
        for (Index j = i; j < modes; ++j) n.push_back("aa_" + std::to_string(i) + "_" + std::to_string(j));
    for (Index i = 0; i < modes; ++i)
        for (Index j = 0; j < modes; ++j) n.push_back("n_" + std::to_string(i) + "_" + std::to_string(j));
    for (Index i = 0; i < modes; ++i)
        for (Index j = i; j < modes; ++j) n.push_back("adagadag_" + std::to_string(i) + "_" + std::to_string(j));
    return n;
}

std::vector<cplx> flatten(const Moments& m) {
    const Index modes = m.first.a.size();
    std::vector<cplx> v;
    for (Index i = 0; i < modes; ++i) v.push_back(m.first.a(i));
    for (Index i = 0; i < modes; ++i) v.push_back(m.first.adag(i));
    for (Index i = 0; i < modes; ++i)
        for (Index j = i; j < modes; ++j) v.push_back(m.second.aa(i, j));
    for (Index i = 0; i < modes; ++i)
        for (Index j = 0; j < modes; ++j) v.push_back(m.second.normal_a_adag(i, j));
    for (Index i = 0; i < modes; ++i)
        for (Index j = i; j < modes; ++j) v.push_back(m.second.adag_adag(i, j));
    return v;
}

void add_columns(std::vector<std::string>& header, const std::vector<std::string>& names, const std::string& prefix) {
    for (const auto& n : names) {
        header.push_back(prefix + n + "_re");
        header.push_back(prefix + n + "_im");
    }
}

std::string render_csv(const std::string& tname, const std::vector<std::string>& header, const std::vector<double>& grid,
                       const std::vector<std::vector<cplx>>& rows) {
    std::ostringstream out;
    out << tname;
    for (const auto& h : header) out << ',' << h;
    out << '\n';
    for (std::size_t r = 0; r < grid.size(); ++r) {
        out << format_number(grid[r]);
        for (const cplx& z : rows[r]) out << ',' << format_number(z.real()) << ',' << format_number(z.imag());
        out << '\n';
    }
    return out.str();
}

json report_json(const QmeReport& r) {
    json o = json::object();
    for (const auto& c : r.checks) o[c.name] = {{"passed", c.passed}, {"residual", c.residual}};
    return o;
}

json physical_json(const PhysicalityReport& r) {
    json o = json::object();
    for (const auto& c : r.checks) o[c.name] = {{"passed", c.passed}, {"margin", c.margin}};
    return o;
}

bool oracle_supported_kind(const std::string& kind) {
    return kind == "vacuum" || kind == "coherent" || kind == "thermal" || kind == "squeezed" ||
           kind == "squeezed_thermal" || kind == "number_ensemble" || kind == "p" || kind == "plus_p";
}

DensityMatrix oracle_initial(const ScenarioConfig& cfg, const FockSpace& space) {
    if (cfg.initial.fock) return build_state(cfg.initial.fock->first, cfg.initial.fock->second, space, cfg.tail_threshold);
    if (!oracle_supported_kind(cfg.initial.kind))
        throw UnsupportedRegion("oracle: initial state kind '" + cfg.initial.kind +
                                "' has no convergent truncated-Fock representation");
    DensityMatrix rho{CMatrix::Zero(space.dim(), space.dim()), true};
    for (const auto& g : cfg.initial.members) {
        const DensityMatrix k = build_kernel(g, space);
        rho.rho += k.rho;
        rho.hermitian = rho.hermitian && k.hermitian;
    }
    return rho;
}

std::vector<Moments> gaussian_trajectory(const ScenarioConfig& cfg, const QuadraticME& q, const DriftSolution& d,
                                         bool use_ode, bool& fell_back) {
    const auto& members = cfg.initial.members;
    std::vector<std::vector<GaussianParams>> traj(members.size());
    fell_back = false;
    const bool closed = !use_ode && d.has_alpha0 && d.has_sigma0;
    if (!use_ode && !closed) fell_back = true;
    for (std::size_t k = 0; k < members.size(); ++k) {
        GaussianParams cur = members[k];
        double tcur = 0.0;
        for (double t : cfg.grid) {
            if (closed) {
                traj[k].push_back(propagate_closed_form(d, members[k], t));
            } else {
                cur = propagate_ode(q, cur, t - tcur);
                tcur = t;
                traj[k].push_back(cur);
            }
        }
    }
    std::vector<Moments> out;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        if (members.size() == 1 && !cfg.initial.ensemble) {
            out.push_back(moments(traj[0][i]));
        } else {
            std::vector<GaussianParams> at;
            for (auto& tr : traj) at.push_back(tr[i]);
            out.push_back(ensemble_moments(WeightedEnsemble(std::move(at))));
        }
    }
    return out;
}

RunOutput run_real_time(const ScenarioConfig& cfg) {
    const QuadraticME q = lindblad_to_qme(cfg.lindblad);
    const DriftSolution d = drift_matrices(q);
    const bool want_gauss = cfg.engine != EngineChoice::oracle;
    const bool want_oracle = cfg.engine == EngineChoice::oracle || cfg.engine == EngineChoice::both;
    const Index modes = cfg.modes;

    RunOutput out;
    json& s = out.summary;
    s["scenario"] = cfg.scenario;
    s["name"] = cfg.label;
    s["engine"] = engine_name(cfg.engine);
    s["modes"] = modes;
    s["initial_state"] = cfg.initial.kind;
    s["E_spectrum"] = to_json(d.spectrum);
    s["steady_state"] = {{"alpha0_exists", d.has_alpha0},
                         {"alpha0_unique", d.alpha0_unique},
                         {"sigma0_exists", d.has_sigma0},
                         {"sigma0_unique", d.sigma0_unique}};
    if (d.has_alpha0) s["steady_state"]["alpha0"] = to_json(d.alpha0);
    if (d.has_sigma0) s["steady_state"]["sigma0"] = to_json(d.sigma0);
    const QmeReport tp = validate_trace_preserving(q);
    const QmeReport sy = validate_symmetries(q);
    s["validation"]["trace_preserving"] = tp.passed();
    s["validation"]["trace_checks"] = report_json(tp);
    s["validation"]["symmetry_checks"] = report_json(sy);
    bool phys = true;
    for (const auto& g : cfg.initial.members) phys = phys && check_physical(g).physical();
    s["validation"]["initial_state_physical_members"] = phys;
    if (!cfg.initial.ensemble) s["validation"]["initial_state_checks"] = physical_json(check_physical(cfg.initial.members.front()));

    const std::vector<std::string> names = moment_names(modes);
    std::vector<std::string> header;
    std::vector<std::vector<cplx>> rows(cfg.grid.size());

    std::vector<Moments> gm;
    if (want_gauss) {
        bool fell_back = false;
        gm = gaussian_trajectory(cfg, q, d, cfg.engine == EngineChoice::ode, fell_back);
        s["gaussian"] = {{"method", cfg.engine == EngineChoice::ode ? "ode" : (fell_back ? "ode_fallback" : "closed_form")}};
        add_columns(header, names, want_oracle ? "gauss." : "");
        for (std::size_t i = 0; i < gm.size(); ++i) {
            const auto f = flatten(gm[i]);
            rows[i].insert(rows[i].end(), f.begin(), f.end());
        }
    }
    if (want_oracle) {
        if (cfg.nmax < 2) throw UnsupportedRegion("oracle: no truncation available for this mode count");
        const FockSpace space(modes, cfg.nmax);
        const DensityMatrix rho0 = oracle_initial(cfg, space);
        EvolveOptions opt;
        opt.edge_threshold = cfg.edge_threshold;
        const EvolveResult ev = evolve_lindblad(cfg.lindblad, space, rho0, cfg.grid, opt);
        s["oracle"] = {{"nmax", cfg.nmax},
                       {"max_edge_population", ev.max_edge_population},
                       {"max_trace_drift", ev.max_trace_drift}};
        add_columns(header, names, want_gauss ? "oracle." : "");
        double dev = 0.0;
        for (std::size_t i = 0; i < ev.states.size(); ++i) {
            const auto f = flatten(moments_fock(ev.states[i].rho, space));
            if (want_gauss) {
                const auto g = flatten(gm[i]);
                for (std::size_t c = 0; c < f.size(); ++c) dev = std::max(dev, std::abs(f[c] - g[c]));
            }
            rows[i].insert(rows[i].end(), f.begin(), f.end());
        }
        if (want_gauss) {
            out.max_deviation = dev;
            out.comparison_passed = dev <= cfg.tolerance;
            s["comparison"] = {{"max_abs_deviation", dev}, {"tolerance", cfg.tolerance}, {"passed", out.comparison_passed}};
        }
    }
    out.csv = render_csv("t", header, cfg.grid, rows);
    return out;
}

RunOutput run_imaginary_time(const ScenarioConfig& cfg) {
    const Index modes = cfg.modes;
    const bool want_gauss = cfg.engine != EngineChoice::oracle;
    const bool want_oracle = cfg.engine == EngineChoice::oracle || cfg.engine == EngineChoice::both;
    std::optional<GaussianParams> g0;
    if (cfg.initial.kind == "thermal") g0 = cfg.initial.members.front();

    RunOutput out;
    json& s = out.summary;
    s["scenario"] = cfg.scenario;
    s["name"] = cfg.label;
    s["engine"] = engine_name(cfg.engine);
    s["modes"] = modes;
    s["tau0"] = cfg.tau0;
    const QuadraticME q = imaginary_time_qme(CMatrix(cfg.omega.cast<cplx>().asDiagonal()));
    const DriftSolution d = drift_matrices(q);
    s["E_spectrum"] = to_json(d.spectrum);
    s["steady_state"] = {{"sigma0_exists", false}, {"note", "imaginary-time flow has no trace-preserving steady state"}};
    const QmeReport tp = validate_trace_preserving(q);
    s["validation"]["trace_preserving"] = tp.passed();
    s["validation"]["trace_checks"] = report_json(tp);

    std::vector<std::string> names{"Omega"};
    for (Index k = 0; k < modes; ++k) names.push_back("n_" + std::to_string(k) + "_" + std::to_string(k));
    std::vector<std::string> header;
    std::vector<std::vector<cplx>> rows(cfg.grid.size());
    std::vector<std::vector<cplx>> gvals;

    if (want_gauss) {
        const auto method = cfg.engine == EngineChoice::ode ? ImaginaryTimeMethod::characteristics_ode
                                                             : ImaginaryTimeMethod::analytic;
        const double tau0 = g0 ? cfg.tau0 : cfg.tau0;
        const auto traj = propagate_imaginary_time(cfg.omega, tau0, cfg.grid, g0, method);
        add_columns(header, names, want_oracle ? "gauss." : "");
        for (std::size_t i = 0; i < traj.size(); ++i) {
            std::vector<cplx> v{traj[i].omega()};
            for (Index k = 0; k < modes; ++k) v.push_back(traj[i].n()(k, k));
            gvals.push_back(v);
            rows[i].insert(rows[i].end(), v.begin(), v.end());
        }
    }
    if (want_oracle) {
        const int nmax = std::max(cfg.nmax, 2);
        const FockSpace space(1, nmax);
        // per-mode diagonal weights; the Hamiltonian is a sum of independent modes
        std::vector<Eigen::VectorXcd> start(modes);
        cplx w0 = 1.0;
        double t_ref = 0.0;
        for (Index k = 0; k < modes; ++k) {
            start[k] = CVector::Ones(nmax + 1);
            if (g0) {
                const auto kern = build_kernel(thermal(1.0, ThermalSpec{CMatrix::Constant(1, 1, g0->n()(k, k))}), space);
                start[k] = kern.rho.diagonal();
            }
        }
        if (g0) {
            w0 = g0->omega();
            t_ref = cfg.tau0;
        }
        add_columns(header, names, want_gauss ? "oracle." : "");
        double dev = 0.0;
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
            const double tau = cfg.grid[i] - t_ref;
            cplx z = w0;
            std::vector<cplx> v{0.0};
            for (Index k = 0; k < modes; ++k) {
                cplx zk = 0.0, nk = 0.0;
                for (int n = 0; n <= nmax; ++n) {
                    const cplx w = start[k](n) * std::exp(-tau * cfg.omega(k) * n);
                    zk += w;
                    nk += static_cast<double>(n) * w;
                }
                z *= zk;
                v.push_back(nk / zk);
            }
            v[0] = z;
            if (want_gauss) {
                dev = std::max(dev, std::abs(v[0] - gvals[i][0]) / std::abs(gvals[i][0]));
                for (std::size_t c = 1; c < v.size(); ++c) dev = std::max(dev, std::abs(v[c] - gvals[i][c]));
            }
            rows[i].insert(rows[i].end(), v.begin(), v.end());
        }
        s["oracle"] = {{"nmax", nmax}};
        if (want_gauss) {
            out.max_deviation = dev;
            out.comparison_passed = dev <= cfg.tolerance;
            s["comparison"] = {{"max_deviation", dev},
                               {"measure", "relative for Omega, absolute for occupations"},
                               {"tolerance", cfg.tolerance},
                               {"passed", out.comparison_passed}};
        }
    }
    out.csv = render_csv("tau", header, cfg.grid, rows);
    return out;
}

}  // namespace

RunOutput run_scenario(const ScenarioConfig& cfg) {
    return cfg.imaginary_time ? run_imaginary_time(cfg) : run_real_time(cfg);
}

ValidationOutput validate_scenario(const ScenarioConfig& cfg) {
    ValidationOutput v;
    std::ostringstream out;
    out << "scenario " << cfg.scenario << " (" << cfg.modes << " mode" << (cfg.modes == 1 ? "" : "s") << ")\n";
    out << "config: pass\n";
    if (cfg.imaginary_time) {
        const QuadraticME q = imaginary_time_qme(CMatrix(cfg.omega.cast<cplx>().asDiagonal()));
        out << "master equation: imaginary-time flow (trace not preserved by design)\n";
        out << validate_trace_preserving(q).describe();
    } else {
        const QuadraticME q = lindblad_to_qme(cfg.lindblad);
        const QmeReport tp = validate_trace_preserving(q);
        const QmeReport sy = validate_symmetries(q);
        out << "trace preservation: " << (tp.passed() ? "pass" : "FAIL") << "\n" << tp.describe();
        out << "coefficient symmetries: " << (sy.passed() ? "pass" : "FAIL") << "\n" << sy.describe();
        v.passed = tp.passed() && sy.passed();
    }
    if (cfg.initial.kind != "identity") {
        bool phys = true;
        for (const auto& g : cfg.initial.members) phys = phys && check_physical(g).physical();
        if (cfg.initial.ensemble) {
            out << "initial state: " << cfg.initial.kind << " ensemble of " << cfg.initial.members.size()
                << " non-Hermitian kernels (represents a physical state as a whole)\n";
        } else if (phys) {
            out << "initial state: " << cfg.initial.kind << " physical: pass\n";
        } else {
            out << "initial state: " << cfg.initial.kind << " WARNING: unphysical basis member (run still permitted)\n";
            out << check_physical(cfg.initial.members.front()).describe();
        }
    }
    out << (v.passed ? "result: pass\n" : "result: FAIL\n");
    v.text = out.str();
    return v;
}

}  // namespace gaussop
