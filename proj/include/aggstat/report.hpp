#ifndef AGGSTAT_REPORT_HPP
#define AGGSTAT_REPORT_HPP

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "aggstat/design.hpp"
#include "aggstat/fisher.hpp"
#include "aggstat/linalg.hpp"
#include "aggstat/montecarlo.hpp"

namespace aggstat {

using ordered_json = nlohmann::ordered_json;

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string csv_cell(const std::optional<double>& x) {
    return x ? format_double(*x) : std::string();
}

inline ordered_json json_cell(const std::optional<double>& x) {
    return x ? ordered_json(*x) : ordered_json(nullptr);
}

inline std::optional<double> efficiency_cell(const EstimandSummary& s) {
    if (s.crb && *s.crb > 0.0)
        return s.mse / *s.crb;
    return std::nullopt;
}

inline void append_summary_rows(std::string& out, const MCSummary& summary,
                                const std::string& prefix) {
    for (const auto& e : summary.estimands) {
        out += prefix;
        out += e.name;
        out += ',' + format_double(e.truth);
        out += ',' + format_double(e.mean_estimate);
        out += ',' + format_double(e.bias);
        out += ',' + format_double(e.bias_se);
        out += ',' + format_double(e.mse);
        out += ',' + format_double(e.mse_se);
        out += ',' + csv_cell(e.theory_mse);
        out += ',' + csv_cell(e.crb);
        out += ',' + csv_cell(efficiency_cell(e));
        out += ',' + std::to_string(summary.replicates);
        out += '\n';
    }
}

inline ordered_json estimand_json(const EstimandSummary& e) {
    ordered_json j;
    j["estimand"] = e.name;
    j["truth"] = e.truth;
    j["mean"] = e.mean_estimate;
    j["bias"] = e.bias;
    j["bias_se"] = e.bias_se;
    j["mse"] = e.mse;
    j["mse_se"] = e.mse_se;
    j["theory_mse"] = json_cell(e.theory_mse);
    j["crb"] = json_cell(e.crb);
    j["efficiency"] = json_cell(efficiency_cell(e));
    return j;
}

} // namespace detail

// Fixed column order (documented in the README; golden files depend on it):
// estimand,truth,mean,bias,bias_se,mse,mse_se,theory_mse,crb,efficiency,replicates
inline constexpr const char* kSummaryCsvHeader =
    "estimand,truth,mean,bias,bias_se,mse,mse_se,theory_mse,crb,efficiency,replicates";

inline std::string summary_csv(const MCSummary& summary) {
    std::string out = kSummaryCsvHeader;
    out += '\n';
    detail::append_summary_rows(out, summary, "");
    return out;
}

inline ordered_json summary_json(const MCSummary& summary) {
    ordered_json j;
    j["replicates"] = summary.replicates;
    auto& rows = j["estimands"] = ordered_json::array();
    for (const auto& e : summary.estimands)
        rows.push_back(detail::estimand_json(e));
    return j;
}

inline std::string sweep_csv(const SweepTable& table) {
    std::string out = "n,";
    out += kSummaryCsvHeader;
    out += '\n';
    for (const auto& row : table.rows)
        detail::append_summary_rows(out, row.summary, std::to_string(row.n) + ',');
    return out;
}

inline ordered_json sweep_json(const SweepTable& table) {
    ordered_json j;
    auto& rows = j["rows"] = ordered_json::array();
    for (const auto& row : table.rows) {
        ordered_json r;
        r["n"] = row.n;
        r["replicates"] = row.summary.replicates;
        auto& ests = r["estimands"] = ordered_json::array();
        for (const auto& e : row.summary.estimands)
            ests.push_back(detail::estimand_json(e));
        rows.push_back(std::move(r));
    }
    return j;
}

// Output of the Fisher/CRB analysis: the information matrix, its inverse,
// and (for the stock two-group constructions) the closed-form inverse with
// the largest entry-wise deviation from the numeric one.
struct CrbAnalysis {
    FisherMatrix fisher;
    CRBMatrix crb;
    std::optional<Matrix> closed_form;
    std::optional<double> max_abs_delta;
};

inline std::string crb_csv(const CrbAnalysis& a) {
    const std::size_t k = a.fisher.entries.rows();
    std::string out = "matrix,parameter";
    for (const auto& label : a.fisher.labels)
        out += ',' + label;
    out += '\n';
    const auto emit = [&](const char* name, const Matrix& m) {
        for (std::size_t i = 0; i < k; ++i) {
            out += name;
            out += ',' + a.fisher.labels[i];
            for (std::size_t jcol = 0; jcol < k; ++jcol)
                out += ',' + format_double(m(i, jcol));
            out += '\n';
        }
    };
    emit("fisher", a.fisher.entries);
    emit("crb", a.crb.entries);
    if (a.closed_form) {
        emit("closed_form", *a.closed_form);
        out += "max_abs_delta,,";
        out += format_double(*a.max_abs_delta);
        out += '\n';
    }
    return out;
}

inline ordered_json crb_json(const CrbAnalysis& a) {
    const auto matrix_rows = [](const Matrix& m) {
        ordered_json rows = ordered_json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            ordered_json row = ordered_json::array();
            for (std::size_t jcol = 0; jcol < m.cols(); ++jcol)
                row.push_back(m(i, jcol));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    ordered_json j;
    j["labels"] = a.fisher.labels;
    j["fisher"] = matrix_rows(a.fisher.entries);
    j["crb"] = matrix_rows(a.crb.entries);
    if (a.closed_form) {
        j["closed_form"] = matrix_rows(*a.closed_form);
        j["max_abs_delta"] = *a.max_abs_delta;
    }
    return j;
}

// Column order: channels,groups,rank,determinant,condition_estimate,identifiable,row_totals
// (determinant is blank for non-square designs; row totals are ';'-joined).
inline std::string diagnostics_csv(const ChannelDesign& d, const DesignDiagnostics& diag) {
    std::string out = "channels,groups,rank,determinant,condition_estimate,identifiable,row_totals\n";
    out += std::to_string(d.channels());
    out += ',' + std::to_string(d.groups());
    out += ',' + std::to_string(diag.rank);
    out += ',';
    if (diag.determinant)
        out += std::to_string(*diag.determinant);
    out += ',' + format_double(diag.condition_estimate);
    out += ',';
    out += is_identifiable(d) ? "true" : "false";
    out += ',';
    for (std::size_t i = 0; i < d.channels(); ++i) {
        if (i > 0)
            out += ';';
        out += std::to_string(d.row_total(i));
    }
    out += '\n';
    return out;
}

inline ordered_json diagnostics_json(const ChannelDesign& d, const DesignDiagnostics& diag) {
    ordered_json j;
    j["channels"] = d.channels();
    j["groups"] = d.groups();
    j["rank"] = diag.rank;
    j["determinant"] = diag.determinant ? ordered_json(*diag.determinant) : ordered_json(nullptr);
    j["condition_estimate"] = diag.condition_estimate;
    j["identifiable"] = is_identifiable(d);
    j["row_totals"] = d.row_totals();
    return j;
}

} // namespace aggstat

#endif // AGGSTAT_REPORT_HPP
