#include "kconv/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kconv {

std::string format_float(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", x);
    return buf;
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string reports_to_json(const std::vector<VerificationReport>& reports) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (i) os << ",";
        os << "\n  {\"check_id\": \"" << escape(r.check_id) << "\","
           << " \"K\": " << format_float(r.K) << ","
           << " \"tolerance\": " << format_float(r.tolerance) << ","
           << " \"margin\": " << format_float(r.margin) << ","
           << " \"pass\": " << (r.pass ? "true" : "false") << ","
           << " \"witnesses\": {";
        for (std::size_t w = 0; w < r.witnesses.size(); ++w) {
            if (w) os << ", ";
            os << "\"" << escape(r.witnesses[w].first) << "\": " << format_float(r.witnesses[w].second);
        }
        os << "}, \"note\": \"" << escape(r.note) << "\"}";
    }
    os << "\n]\n";
    return os.str();
}

std::string reports_to_csv(const std::vector<VerificationReport>& reports) {
    std::ostringstream os;
    os << "check_id,K,tolerance,margin,pass\n";
    for (const auto& r : reports)
        os << r.check_id << "," << format_float(r.K) << "," << format_float(r.tolerance) << ","
           << format_float(r.margin) << "," << (r.pass ? "true" : "false") << "\n";
    return os.str();
}

std::vector<VerificationReport> reports_from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_array()) throw std::runtime_error("reports_from_json: expected an array");
    std::vector<VerificationReport> out;
    for (const auto& item : doc) {
        VerificationReport r;
        r.check_id = item.at("check_id").get<std::string>();
        r.K = item.at("K").get<double>();
        r.tolerance = item.at("tolerance").get<double>();
        r.margin = item.at("margin").get<double>();
        r.pass = item.at("pass").get<bool>();
        for (const auto& [key, value] : item.at("witnesses").items())
            r.witnesses.emplace_back(key, value.get<double>());
        r.note = item.value("note", "");
        out.push_back(std::move(r));
    }
    return out;
}

std::string rigidity_to_json(const RigidityReport& report) {
    std::ostringstream os;
    os << "{\n  \"mode\": \"" << escape(report.mode) << "\",\n  \"pass\": "
       << (report.pass ? "true" : "false") << ",\n  \"flow_ratio\": " << format_float(report.flow_ratio)
       << ",\n  \"checks\": [";
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const auto& c = report.checks[i];
        if (i) os << ",";
        os << "\n    {\"name\": \"" << escape(c.name) << "\", \"worst\": " << format_float(c.worst)
           << ", \"tolerance\": " << format_float(c.tolerance) << ", \"pass\": "
           << (c.pass ? "true" : "false") << "}";
    }
    os << "\n  ],\n  \"note\": \"" << escape(report.note) << "\"\n}\n";
    return os.str();
}

std::string contraction_plot_csv(const VerificationReport& report) {
    std::ostringstream os;
    os << "t,ratio,bound\n";
    const std::string prefix = "ratio_t=";
    for (const auto& [key, value] : report.witnesses) {
        if (key.rfind(prefix, 0) != 0) continue;
        const double t = std::stod(key.substr(prefix.size()));
        os << format_float(t) << "," << format_float(value) << ","
           << format_float(std::exp(-report.K * t)) << "\n";
    }
    return os.str();
}

}  // namespace kconv
