#include "entro/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace entro::config {

using scheme::EpsPolicy;
using scheme::FieldSpec;
using scheme::OuterInit;
using scheme::SchemeConfig;
using scheme::SourceSpec;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Entry {
    std::string value;
    int line;
    bool used = false;
};

using KeyMap = std::map<std::string, Entry>;

std::vector<std::string> tokens(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

double to_double(const Entry& e, const std::string& t) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ParseError(e.line, "expected a number, got '" + t + "'");
    }
}

int to_int(const Entry& e, const std::string& t) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ParseError(e.line, "expected an integer, got '" + t + "'");
    }
}

class Reader {
public:
    explicit Reader(KeyMap& map) : map_(map) {}

    bool has(const std::string& key) const { return map_.count(key) > 0; }

    Entry& entry(const std::string& key) {
        auto& e = map_.at(key);
        e.used = true;
        return e;
    }

    double num(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        auto& e = entry(key);
        const auto t = tokens(e.value);
        if (t.size() != 1) throw ParseError(e.line, key + " takes one number");
        return to_double(e, t[0]);
    }

    int integer(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        auto& e = entry(key);
        const auto t = tokens(e.value);
        if (t.size() != 1) throw ParseError(e.line, key + " takes one integer");
        return to_int(e, t[0]);
    }

    std::vector<double> nums(const std::string& key) {
        auto& e = entry(key);
        std::vector<double> out;
        for (const auto& t : tokens(e.value)) out.push_back(to_double(e, t));
        return out;
    }

    FieldSpec field_spec(const std::string& key, FieldSpec fallback) {
        if (!has(key)) return fallback;
        auto& e = entry(key);
        const auto t = tokens(e.value);
        auto need = [&](std::size_t n) {
            if (t.size() != n)
                throw ParseError(e.line, key + ": wrong number of arguments for '" + t[0] + "'");
        };
        FieldSpec f;
        if (t.empty()) throw ParseError(e.line, key + " is empty");
        if (t[0] == "constant") {
            need(2);
            f.kind = FieldSpec::Kind::Constant;
            f.base = to_double(e, t[1]);
        } else if (t[0] == "linear") {
            need(3);
            f.kind = FieldSpec::Kind::Linear;
            f.base = to_double(e, t[1]);
            f.slope = to_double(e, t[2]);
        } else if (t[0] == "cosine") {
            need(4);
            f.kind = FieldSpec::Kind::Cosine;
            f.base = to_double(e, t[1]);
            f.amp = to_double(e, t[2]);
            f.mode = to_int(e, t[3]);
        } else if (t[0] == "gaussian") {
            need(5);
            f.kind = FieldSpec::Kind::Gaussian;
            f.base = to_double(e, t[1]);
            f.amp = to_double(e, t[2]);
            f.center = to_double(e, t[3]);
            f.width = to_double(e, t[4]);
        } else {
            throw ParseError(e.line, key + ": unknown field kind '" + t[0] + "'");
        }
        return f;
    }

    void reject_unused() const {
        for (const auto& [key, e] : map_)
            if (!e.used) throw ParseError(e.line, "unknown key '" + key + "'");
    }

private:
    KeyMap& map_;
};

SourceSpec load_table(const std::string& path, int line) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(line, "cannot open source table '" + path + "'");
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    SourceSpec s;
    s.kind = SourceSpec::Kind::Tabulated;
    s.table_path = path;
    // frames are read lazily against the configured grid below
    for (std::uint32_t j = 0; j < count; ++j) {
        double t = 0.0;
        in.read(reinterpret_cast<char*>(&t), 8);
        if (!in) throw ParseError(line, "truncated source table '" + path + "'");
        s.times.push_back(t);
    }
    return s;
}

}  // namespace

SchemeConfig parse_text(const std::string& text) {
    KeyMap map;
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(lineno, "malformed section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(lineno, "expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        if (key.empty()) throw ParseError(lineno, "empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (map.count(full)) throw ParseError(lineno, "duplicate key '" + full + "'");
        map[full] = Entry{value, lineno};
    }

    Reader r(map);
    SchemeConfig cfg;

    // [grid]
    cfg.grid.dim = r.integer("grid.dim", 1);
    if (r.has("grid.extent")) {
        auto& e = r.entry("grid.extent");
        const auto t = tokens(e.value);
        if (static_cast<int>(t.size()) != cfg.grid.dim)
            throw ParseError(e.line, "grid.extent needs one value per axis");
        for (int k = 0; k < cfg.grid.dim; ++k) cfg.grid.extent[k] = to_double(e, t[k]);
    }
    if (r.has("grid.cells")) {
        auto& e = r.entry("grid.cells");
        const auto t = tokens(e.value);
        if (static_cast<int>(t.size()) != cfg.grid.dim)
            throw ParseError(e.line, "grid.cells needs one value per axis");
        for (int k = 0; k < cfg.grid.dim; ++k) cfg.grid.cells[k] = to_int(e, t[k]);
    }

    // [model]
    cfg.k0 = r.num("model.k0", cfg.k0);
    cfg.ell = r.num("model.ell", cfg.ell);
    if (r.has("model.beta")) {
        auto& e = r.entry("model.beta");
        const auto t = tokens(e.value);
        try {
            if (t.empty()) throw std::invalid_argument("model.beta is empty");
            if (t[0] == "zero" && t.size() == 1)
                cfg.beta = monotone::ScalarGraph::zero();
            else if (t[0] == "log" && t.size() == 1)
                cfg.beta = monotone::ScalarGraph::log_graph();
            else if (t[0] == "indicator_box" && t.size() == 3)
                cfg.beta = monotone::ScalarGraph::indicator_box(to_double(e, t[1]),
                                                                to_double(e, t[2]));
            else if (t[0] == "power" && t.size() == 2)
                cfg.beta = monotone::ScalarGraph::power(to_int(e, t[1]));
            else
                throw std::invalid_argument("unknown graph '" + e.value + "'");
        } catch (const std::invalid_argument& ex) {
            throw ParseError(e.line, std::string("model.beta: ") + ex.what());
        }
    }
    if (r.has("model.pi")) {
        auto v = r.nums("model.pi");
        if (v.size() != 2)
            throw ParseError(map.at("model.pi").line, "model.pi takes 'p1 p0'");
        cfg.pi = {v[0], v[1]};
    }
    if (r.has("model.op_a")) {
        auto& e = r.entry("model.op_a");
        const auto t = tokens(e.value);
        if (t.size() == 1 && t[0] == "zero") cfg.op_a = monotone::NonlocalOp::zero();
        else if (t.size() == 1 && t[0] == "sign_nonlocal")
            cfg.op_a = monotone::NonlocalOp::sign_nonlocal();
        else if (t.size() == 1 && t[0] == "sign_local")
            cfg.op_a = monotone::NonlocalOp::sign_local();
        else throw ParseError(e.line, "model.op_a: unknown operator '" + e.value + "'");
    }
    cfg.theta_star_spec = r.field_spec("model.theta_star", cfg.theta_star_spec);
    cfg.theta0_spec = r.field_spec("model.theta0", cfg.theta0_spec);
    cfg.chi0_spec = r.field_spec("model.chi0", cfg.chi0_spec);
    if (r.has("model.source")) {
        auto& e = r.entry("model.source");
        const auto t = tokens(e.value);
        if (t.size() == 1 && t[0] == "zero") {
            cfg.source = SourceSpec{};
        } else if (t.size() == 2 && t[0] == "constant") {
            cfg.source.kind = SourceSpec::Kind::Polynomial;
            cfg.source.coeffs = {to_double(e, t[1])};
            cfg.source.profile = FieldSpec{FieldSpec::Kind::Constant, 1.0};
        } else if (t.size() >= 2 && t[0] == "poly") {
            cfg.source.kind = SourceSpec::Kind::Polynomial;
            cfg.source.coeffs.clear();
            for (std::size_t k = 1; k < t.size(); ++k)
                cfg.source.coeffs.push_back(to_double(e, t[k]));
            cfg.source.profile = FieldSpec{FieldSpec::Kind::Constant, 1.0};
        } else if (t.size() == 2 && t[0] == "table") {
            cfg.source = load_table(t[1], e.line);
        } else {
            throw ParseError(e.line, "model.source: unknown form '" + e.value + "'");
        }
    }
    if (r.has("model.source_profile")) {
        if (cfg.source.kind != SourceSpec::Kind::Polynomial)
            throw ParseError(map.at("model.source_profile").line,
                             "source_profile needs a polynomial source");
        cfg.source.profile = r.field_spec("model.source_profile", cfg.source.profile);
    }

    // [time]
    cfg.final_time = r.num("time.T", cfg.final_time);
    cfg.steps = r.integer("time.N", cfg.steps);

    // [solver]
    cfg.outer_tol = r.num("solver.outer_tol", cfg.outer_tol);
    cfg.newton_tol = r.num("solver.newton_tol", cfg.newton_tol);
    cfg.cg_tol = r.num("solver.cg_tol", cfg.cg_tol);
    cfg.outer_maxit = r.integer("solver.outer_maxit", cfg.outer_maxit);
    cfg.newton_maxit = r.integer("solver.newton_maxit", cfg.newton_maxit);
    cfg.cg_maxit = r.integer("solver.cg_maxit", cfg.cg_maxit);
    if (r.has("solver.outer_init")) {
        auto& e = r.entry("solver.outer_init");
        const auto v = tokens(e.value);
        if (v.size() == 1 && v[0] == "warm") cfg.outer_init = OuterInit::Warm;
        else if (v.size() == 1 && v[0] == "cold") cfg.outer_init = OuterInit::Cold;
        else throw ParseError(e.line, "solver.outer_init must be warm or cold");
    }
    if (r.has("solver.stabilization")) {
        auto& e = r.entry("solver.stabilization");
        const auto v = tokens(e.value);
        if (v.size() == 1 && v[0] == "on") cfg.stabilization = true;
        else if (v.size() == 1 && v[0] == "off") cfg.stabilization = false;
        else throw ParseError(e.line, "solver.stabilization must be on or off");
    }

    // [epsilon]
    if (r.has("epsilon.policy")) {
        auto& e = r.entry("epsilon.policy");
        const auto v = tokens(e.value);
        if (v.size() == 1 && v[0] == "fixed") cfg.epsilon.policy = EpsPolicy::Fixed;
        else if (v.size() == 1 && v[0] == "ladder") cfg.epsilon.policy = EpsPolicy::Ladder;
        else throw ParseError(e.line, "epsilon.policy must be fixed or ladder");
    }
    cfg.epsilon.fixed_eps = r.num("epsilon.eps", cfg.epsilon.fixed_eps);
    cfg.epsilon.ladder_start = r.num("epsilon.ladder_start", cfg.epsilon.ladder_start);
    cfg.epsilon.ladder_factor = r.num("epsilon.ladder_factor", cfg.epsilon.ladder_factor);
    cfg.epsilon.ladder_min = r.num("epsilon.ladder_min", cfg.epsilon.ladder_min);

    // [output]
    cfg.snapshot_every = r.integer("output.snapshot_every", cfg.snapshot_every);

    r.reject_unused();

    // late-bound table frames (need the grid)
    if (cfg.source.kind == SourceSpec::Kind::Tabulated) {
        std::ifstream in(cfg.source.table_path, std::ios::binary);
        std::uint32_t count = 0;
        in.read(reinterpret_cast<char*>(&count), 4);
        cfg.source.times.clear();
        for (std::uint32_t j = 0; j < count; ++j) {
            double t = 0.0;
            in.read(reinterpret_cast<char*>(&t), 8);
            cfg.source.times.push_back(t);
            cfg.source.frames.push_back(read_field(in, cfg.grid));
        }
        if (!in) throw std::invalid_argument("truncated source table");
    }

    cfg.validate();
    return cfg;
}

SchemeConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_text(os.str());
}

std::string serialize(const SchemeConfig& cfg) {
    std::ostringstream os;
    os << "[grid]\n";
    os << "dim = " << cfg.grid.dim << "\n";
    os << "extent =";
    for (int k = 0; k < cfg.grid.dim; ++k) os << ' ' << fmt(cfg.grid.extent[k]);
    os << "\ncells =";
    for (int k = 0; k < cfg.grid.dim; ++k) os << ' ' << cfg.grid.cells[k];
    os << "\n\n[model]\n";
    os << "k0 = " << fmt(cfg.k0) << "\n";
    os << "ell = " << fmt(cfg.ell) << "\n";
    os << "beta = ";
    switch (cfg.beta.kind) {
        case monotone::ScalarGraph::Kind::Zero: os << "zero"; break;
        case monotone::ScalarGraph::Kind::Log: os << "log"; break;
        case monotone::ScalarGraph::Kind::IndicatorBox:
            os << "indicator_box " << fmt(cfg.beta.lo) << ' ' << fmt(cfg.beta.hi);
            break;
        case monotone::ScalarGraph::Kind::Power:
            os << "power " << cfg.beta.exponent;
            break;
    }
    os << "\npi = " << fmt(cfg.pi.p1) << ' ' << fmt(cfg.pi.p0) << "\n";
    os << "op_a = ";
    switch (cfg.op_a.kind) {
        case monotone::NonlocalOp::Kind::Zero: os << "zero"; break;
        case monotone::NonlocalOp::Kind::SignNonlocal: os << "sign_nonlocal"; break;
        case monotone::NonlocalOp::Kind::SignLocal: os << "sign_local"; break;
    }
    auto put_field = [&](const char* key, const FieldSpec& f) {
        os << '\n' << key << " = ";
        switch (f.kind) {
            case FieldSpec::Kind::Constant: os << "constant " << fmt(f.base); break;
            case FieldSpec::Kind::Linear:
                os << "linear " << fmt(f.base) << ' ' << fmt(f.slope);
                break;
            case FieldSpec::Kind::Cosine:
                os << "cosine " << fmt(f.base) << ' ' << fmt(f.amp) << ' ' << f.mode;
                break;
            case FieldSpec::Kind::Gaussian:
                os << "gaussian " << fmt(f.base) << ' ' << fmt(f.amp) << ' '
                   << fmt(f.center) << ' ' << fmt(f.width);
                break;
        }
    };
    put_field("theta_star", cfg.theta_star_spec);
    put_field("theta0", cfg.theta0_spec);
    put_field("chi0", cfg.chi0_spec);
    os << "\nsource = ";
    switch (cfg.source.kind) {
        case SourceSpec::Kind::Zero: os << "zero"; break;
        case SourceSpec::Kind::Polynomial:
            os << "poly";
            for (double c : cfg.source.coeffs) os << ' ' << fmt(c);
            break;
        case SourceSpec::Kind::Tabulated:
            os << "table " << cfg.source.table_path;
            break;
    }
    os << '\n';
    if (cfg.source.kind == SourceSpec::Kind::Polynomial)
        put_field("source_profile", cfg.source.profile), os << '\n';
    os << "\n[time]\n";
    os << "T = " << fmt(cfg.final_time) << "\n";
    os << "N = " << cfg.steps << "\n";
    os << "\n[solver]\n";
    os << "outer_tol = " << fmt(cfg.outer_tol) << "\n";
    os << "newton_tol = " << fmt(cfg.newton_tol) << "\n";
    os << "cg_tol = " << fmt(cfg.cg_tol) << "\n";
    os << "outer_maxit = " << cfg.outer_maxit << "\n";
    os << "newton_maxit = " << cfg.newton_maxit << "\n";
    os << "cg_maxit = " << cfg.cg_maxit << "\n";
    os << "outer_init = " << (cfg.outer_init == OuterInit::Warm ? "warm" : "cold") << "\n";
    os << "stabilization = " << (cfg.stabilization ? "on" : "off") << "\n";
    os << "\n[epsilon]\n";
    os << "policy = " << (cfg.epsilon.policy == EpsPolicy::Fixed ? "fixed" : "ladder") << "\n";
    os << "eps = " << fmt(cfg.epsilon.fixed_eps) << "\n";
    os << "ladder_start = " << fmt(cfg.epsilon.ladder_start) << "\n";
    os << "ladder_factor = " << fmt(cfg.epsilon.ladder_factor) << "\n";
    os << "ladder_min = " << fmt(cfg.epsilon.ladder_min) << "\n";
    os << "\n[output]\n";
    os << "snapshot_every = " << cfg.snapshot_every << "\n";
    return os.str();
}

}  // namespace entro::config
