#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "offgrid/types.hpp"

namespace offgrid {

// RFC-4180: quote a field if it holds a comma, quote, or newline; double
// embedded quotes.
inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += "\"";
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_quote(fields[i]);
    }
    out += '\n';
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Per-iteration trace with a fixed column set; columns a solver does not
// produce stay empty.
inline void trace_export(const SolverResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("trace_export: cannot open " + path);
    out << "iter,objective,residual_primal,residual_dual,gap,mu1,mu2,step\n";
    const auto cell = [](const std::vector<double>& v, int i) {
        return i < static_cast<int>(v.size()) ? format_double(v[i]) : std::string();
    };
    for (int i = 0; i < res.iterations; ++i) {
        out << csv_row({std::to_string(i + 1),
                        cell(res.objective_trace, i),
                        cell(res.residual_primal_trace, i),
                        cell(res.residual_dual_trace, i),
                        cell(res.gap_trace, i),
                        cell(res.mu1_trace, i),
                        cell(res.mu2_trace, i),
                        cell(res.step_trace, i)});
    }
    if (!out) throw std::runtime_error("trace_export: write failed for " + path);
}

struct TraceRow {
    int iter;
    std::vector<double> cols; // nan for empty cells
};

// Minimal CSV reader for the trace format (used by tests; handles the quoted
// case for completeness).
inline std::vector<std::vector<std::string>> csv_parse(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    char ch;
    while (in.get(ch)) {
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') { in.get(); field += '"'; }
                else quoted = false;
            } else field += ch;
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            row.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            row.push_back(field);
            field.clear();
            rows.push_back(row);
            row.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (!field.empty() || !row.empty()) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

} // namespace offgrid
