#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "retro/driver.hpp"

namespace retro {

namespace detail {

/// Shortest exact decimal form: 17 significant digits round-trip any finite
/// double through strtod.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

inline std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::strtod(s.c_str(), nullptr);
}

} // namespace detail

/// Column set of the trace CSV, in order. The first eleven columns are the
/// per-iteration record; the remaining four are replay metadata (evaluation
/// counts per iteration plus the run seed).
inline const std::vector<std::string>& trace_columns() {
    static const std::vector<std::string> cols = {
        "k",
        "M_k",
        "eps_k",
        "inner_iterations",
        "grad_norm_sample_path",
        "grad_norm_true",
        "loss_true",
        "cumulative_oracle_work",
        "cumulative_gradient_evals",
        "wall_time_ms",
        "inner_status",
        "inner_grad_evals",
        "inner_func_evals",
        "sigma_subsample_size",
        "seed",
    };
    return cols;
}

inline std::string trace_to_csv(const RunTrace& trace) {
    std::string out;
    const auto& cols = trace_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out += cols[i];
        out += (i + 1 == cols.size()) ? '\n' : ',';
    }
    char intbuf[32];
    for (const auto& r : trace.records) {
        auto add_u64 = [&](std::uint64_t v) {
            std::snprintf(intbuf, sizeof(intbuf), "%" PRIu64, v);
            out += intbuf;
            out += ',';
        };
        std::snprintf(intbuf, sizeof(intbuf), "%d", r.k);
        out += intbuf;
        out += ',';
        add_u64(r.m_k);
        out += detail::format_double(r.eps_k);
        out += ',';
        add_u64(r.inner_iterations);
        out += detail::format_double(r.grad_norm_sample_path);
        out += ',';
        out += detail::format_optional(r.grad_norm_true);
        out += ',';
        out += detail::format_optional(r.loss_true);
        out += ',';
        add_u64(r.cumulative_oracle_work);
        add_u64(r.cumulative_gradient_evals);
        out += detail::format_double(r.wall_time_ms);
        out += ',';
        out += to_string(r.inner_status);
        out += ',';
        add_u64(r.inner_grad_evals);
        add_u64(r.inner_func_evals);
        add_u64(r.sigma_subsample_size);
        std::snprintf(intbuf, sizeof(intbuf), "%" PRIu64, trace.seed);
        out += intbuf;
        out += '\n';
    }
    return out;
}

inline void write_trace_csv(const RunTrace& trace,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw config_error("cannot write trace file: " + path.string());
    out << trace_to_csv(trace);
}

/// Parses a trace CSV back into records (+ seed). Exact round trip of
/// everything the CSV stores; final_x and iterates are not serialized.
inline RunTrace parse_trace_csv(std::istream& in, const std::string& origin) {
    RunTrace trace;
    std::string line;
    if (!std::getline(in, line))
        throw config_error("empty trace file: " + origin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::string expected;
        const auto& cols = trace_columns();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            expected += cols[i];
            if (i + 1 < cols.size()) expected += ',';
        }
        if (line != expected)
            throw config_error("unexpected trace header in " + origin);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != trace_columns().size())
            throw config_error("trace " + origin + " line " +
                               std::to_string(line_no) + ": expected " +
                               std::to_string(trace_columns().size()) +
                               " fields, got " + std::to_string(f.size()));
        OuterIterationRecord r;
        r.k = std::stoi(f[0]);
        r.m_k = std::stoull(f[1]);
        r.eps_k = std::strtod(f[2].c_str(), nullptr);
        r.inner_iterations = std::stoull(f[3]);
        r.grad_norm_sample_path = std::strtod(f[4].c_str(), nullptr);
        r.grad_norm_true = detail::parse_optional(f[5]);
        r.loss_true = detail::parse_optional(f[6]);
        r.cumulative_oracle_work = std::stoull(f[7]);
        r.cumulative_gradient_evals = std::stoull(f[8]);
        r.wall_time_ms = std::strtod(f[9].c_str(), nullptr);
        r.inner_status = inner_status_from_string(f[10]);
        r.inner_grad_evals = std::stoull(f[11]);
        r.inner_func_evals = std::stoull(f[12]);
        r.sigma_subsample_size = std::stoull(f[13]);
        trace.seed = std::stoull(f[14]);
        trace.records.push_back(std::move(r));
    }
    return trace;
}

inline RunTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw config_error("cannot open trace file: " + path.string());
    return parse_trace_csv(in, path.string());
}

} // namespace retro
