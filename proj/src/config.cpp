#include "kconv/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kconv/report.hpp"

namespace kconv {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_value(const std::string& raw);

std::vector<std::string> split_top_level(const std::string& body) {
    std::vector<std::string> items;
    int depth = 0;
    bool quoted = false;
    std::string cur;
    for (char c : body) {
        if (c == '"') quoted = !quoted;
        if (!quoted) {
            if (c == '[') ++depth;
            if (c == ']') --depth;
            if (c == ',' && depth == 0) {
                items.push_back(cur);
                cur.clear();
                continue;
            }
        }
        cur += c;
    }
    if (!trim(cur).empty()) items.push_back(cur);
    return items;
}

nlohmann::json parse_value(const std::string& raw) {
    const std::string v = trim(raw);
    if (v.empty()) throw std::runtime_error("toml: empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw std::runtime_error("toml: unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw std::runtime_error("toml: unterminated array");
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& item : split_top_level(v.substr(1, v.size() - 2)))
            arr.push_back(parse_value(item));
        return arr;
    }
    bool integral = !v.empty();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const char c = v[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            integral = false;
            break;
        }
    }
    try {
        if (integral) return std::stoll(v);
        return std::stod(v);
    } catch (const std::exception&) {
        throw std::runtime_error("toml: cannot parse value '" + v + "'");
    }
}

}  // namespace

nlohmann::json parse_toml_subset(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* section = &root;
    std::istringstream in(text);
    std::string line;
    std::string pending;
    while (std::getline(in, line)) {
        std::string chunk = strip_comment(line);
        if (!pending.empty()) {
            pending += " " + chunk;
            // keep accumulating until array brackets balance
            int depth = 0;
            bool quoted = false;
            for (char c : pending) {
                if (c == '"') quoted = !quoted;
                if (!quoted && c == '[') ++depth;
                if (!quoted && c == ']') --depth;
            }
            if (depth > 0) continue;
            chunk = pending;
            pending.clear();
        }
        const std::string t = trim(chunk);
        if (t.empty()) continue;
        if (t.front() == '[' && t.find('=') == std::string::npos) {
            if (t.back() != ']') throw std::runtime_error("toml: malformed section header: " + t);
            std::string name = trim(t.substr(1, t.size() - 2));
            section = &root;
            std::size_t pos = 0;
            while (pos != std::string::npos) {
                const std::size_t dot = name.find('.', pos);
                const std::string part =
                    trim(dot == std::string::npos ? name.substr(pos) : name.substr(pos, dot - pos));
                if (part.empty()) throw std::runtime_error("toml: empty section name component");
                section = &(*section)[part];
                pos = dot == std::string::npos ? std::string::npos : dot + 1;
            }
            if (section->is_null()) *section = nlohmann::json::object();
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw std::runtime_error("toml: expected key = value: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        // multi-line array start
        int depth = 0;
        bool quoted = false;
        for (char c : value) {
            if (c == '"') quoted = !quoted;
            if (!quoted && c == '[') ++depth;
            if (!quoted && c == ']') --depth;
        }
        if (depth > 0) {
            pending = t;
            continue;
        }
        (*section)[key] = parse_value(value);
    }
    if (!pending.empty()) throw std::runtime_error("toml: unterminated multi-line array");
    return root;
}

nlohmann::json load_config(const std::string& path) {
    const std::string text = slurp(path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return nlohmann::json::parse(text);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") return parse_toml_subset(text);
    // fall back on sniffing
    const std::string t = trim(text);
    if (!t.empty() && (t.front() == '{' || t.front() == '[')) return nlohmann::json::parse(text);
    return parse_toml_subset(text);
}

std::vector<double> read_csv_values(const std::string& path, int* rows, int* cols) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    std::vector<double> values;
    std::string line;
    int r = 0, c = -1;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        int this_cols = 0;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            const std::string v = trim(cell);
            if (v.empty()) continue;
            values.push_back(std::stod(v));
            ++this_cols;
        }
        if (c == -1) c = this_cols;
        else if (c != this_cols)
            throw std::runtime_error("CSV has ragged rows: " + path);
        ++r;
    }
    if (rows) *rows = r;
    if (cols) *cols = c < 0 ? 0 : c;
    return values;
}

void write_csv_matrix(const std::string& path, const std::vector<double>& values, int cols) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV file: " + path);
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << format_float(values[i]);
        out << (((i + 1) % cols == 0) ? '\n' : ',');
    }
}

MetricMeasureSpace space_from_config(const nlohmann::json& doc) {
    if (!doc.contains("space")) throw std::runtime_error("config: missing [space] section");
    const auto& s = doc.at("space");
    const std::string backend = s.value("backend", "grid");
    if (backend == "grid") {
        const int dim = s.at("dimension").get<int>();
        const double spacing = s.at("spacing").get<double>();
        std::vector<std::pair<double, double>> bounds;
        for (const auto& b : s.at("bounds"))
            bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
        return MetricMeasureSpace::grid(dim, bounds, spacing);
    }
    if (backend == "graph") {
        int rows = 0, cols = 0;
        std::vector<double> dist = read_csv_values(s.at("dist_matrix_path").get<std::string>(), &rows, &cols);
        if (rows != cols) throw std::runtime_error("config: dist matrix must be square");
        std::vector<double> weights = read_csv_values(s.at("weights_path").get<std::string>());
        return MetricMeasureSpace::graph(std::move(dist), std::move(weights));
    }
    throw std::runtime_error("config: unknown backend '" + backend + "'");
}

ScalarField potential_from_config(const MetricMeasureSpace& M, const nlohmann::json& doc) {
    if (!doc.contains("potential")) throw std::runtime_error("config: missing [potential] section");
    const auto& p = doc.at("potential");
    const std::string kind = p.at("kind").get<std::string>();
    ScalarField u(M.size(), 0.0);
    if (kind == "quadratic") {
        const double lambda = p.value("lambda", 1.0);
        for (int i = 0; i < M.size(); ++i) {
            const auto x = M.point(i);
            double r2 = 0.0;
            for (double c : x) r2 += c * c;
            u[i] = 0.5 * lambda * r2;
        }
        return u;
    }
    if (kind == "linear") {
        std::vector<double> coeffs;
        for (const auto& c : p.at("coeffs")) coeffs.push_back(c.get<double>());
        if (static_cast<int>(coeffs.size()) != M.dim())
            throw std::runtime_error("config: linear potential needs one coefficient per axis");
        for (int i = 0; i < M.size(); ++i) {
            const auto x = M.point(i);
            double s = 0.0;
            for (int a = 0; a < M.dim(); ++a) s += coeffs[a] * x[a];
            u[i] = s;
        }
        return u;
    }
    if (kind == "custom") {
        std::vector<double> values = read_csv_values(p.at("path").get<std::string>());
        if (static_cast<int>(values.size()) != M.size())
            throw std::runtime_error("config: custom potential size mismatch");
        return ScalarField(std::move(values));
    }
    throw std::runtime_error("config: unknown potential kind '" + kind + "'");
}

Density density_from_config(const MetricMeasureSpace& M, const nlohmann::json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "bump") {
        std::vector<double> center;
        for (const auto& c : spec.at("center")) center.push_back(c.get<double>());
        return gaussian_bump(M, center, spec.at("width").get<double>());
    }
    if (kind == "csv") {
        std::vector<double> raw = read_csv_values(spec.at("path").get<std::string>());
        return Density::normalized(std::move(raw), M);
    }
    throw std::runtime_error("config: unknown measure kind '" + kind + "'");
}

Scenario scenario_from_config(const nlohmann::json& doc) {
    Scenario sc;
    if (!doc.contains("scenario")) return sc;
    const auto& s = doc.at("scenario");
    if (s.contains("times")) {
        sc.times.clear();
        for (const auto& t : s.at("times")) sc.times.push_back(t.get<double>());
    }
    sc.horizon = s.value("horizon", sc.horizon);
    sc.flow_dt = s.value("flow_dt", sc.flow_dt);
    sc.evi_samples = s.value("evi_samples", sc.evi_samples);
    sc.evi_t_min = s.value("evi_t_min", sc.evi_t_min);
    sc.gradient_test_axis = s.value("gradient_test_axis", sc.gradient_test_axis);
    sc.tol_scale = s.value("tol_scale", sc.tol_scale);
    if (s.contains("bump_centers")) {
        for (const auto& c : s.at("bump_centers")) {
            std::vector<double> center;
            for (const auto& x : c) center.push_back(x.get<double>());
            sc.bump_centers.push_back(std::move(center));
        }
    }
    if (s.contains("bump_widths"))
        for (const auto& w : s.at("bump_widths")) sc.bump_widths.push_back(w.get<double>());
    if (s.contains("point_pairs")) {
        for (const auto& pair : s.at("point_pairs")) {
            PointPair pp;
            for (const auto& x : pair.at(0)) pp.x.push_back(x.get<double>());
            for (const auto& y : pair.at(1)) pp.y.push_back(y.get<double>());
            sc.point_pairs.push_back(std::move(pp));
        }
    }
    return sc;
}

std::vector<double> k_values_from_config(const nlohmann::json& doc) {
    std::vector<double> ks;
    if (doc.contains("scenario") && doc.at("scenario").contains("K")) {
        const auto& k = doc.at("scenario").at("K");
        if (k.is_array())
            for (const auto& v : k) ks.push_back(v.get<double>());
        else
            ks.push_back(k.get<double>());
    }
    return ks;
}

}  // namespace kconv
