#pragma once

#include "wmc/core.hpp"
#include "wmc/sampling.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace wmc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        throw IoError("format_double: conversion failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError("cannot parse number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------
// Dense matrices: one CSV row per line, optional leading "# rows=<r> cols=<c>".

inline std::string matrix_to_csv(const Matrix &m) {
    std::string out = "# rows=" + std::to_string(m.rows()) + " cols=" + std::to_string(m.cols()) + "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline Matrix matrix_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    long declared_rows = -1, declared_cols = -1;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.front() == '#') {
            if (first && std::sscanf(line.c_str(), "# rows=%ld cols=%ld", &declared_rows, &declared_cols) != 2)
                throw IoError("malformed matrix header: " + line);
            first = false;
            continue;
        }
        first = false;
        std::vector<double> vals;
        for (const auto &cell : split_csv_line(line))
            vals.push_back(parse_double(cell));
        if (!rows.empty() && vals.size() != rows.front().size())
            throw IoError("ragged matrix CSV");
        rows.push_back(std::move(vals));
    }
    const Index r = Index(rows.size());
    const Index c = r ? Index(rows.front().size()) : 0;
    if (declared_rows >= 0 && (declared_rows != r || declared_cols != c))
        throw IoError("matrix CSV header declares " + std::to_string(declared_rows) + "x" +
                      std::to_string(declared_cols) + " but body is " + std::to_string(r) + "x" + std::to_string(c));
    if (r == 0 || c == 0)
        throw IoError("matrix CSV is empty");
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
            m(i, j) = rows[std::size_t(i)][std::size_t(j)];
    require_finite(m, "matrix_from_csv");
    return m;
}

inline Matrix load_matrix(const std::filesystem::path &p) { return matrix_from_csv(read_text(p)); }
inline void save_matrix(const std::filesystem::path &p, const Matrix &m) { write_text(p, matrix_to_csv(m)); }

// ---------------------------------------------------------------------------
// Weights: two CSV lines, row weights then column weights.

inline std::string weights_to_csv(const WeightPair &w) {
    std::string out;
    for (const Vector *v : {&w.row(), &w.col()}) {
        for (Index i = 0; i < v->size(); ++i) {
            if (i)
                out += ',';
            out += format_double((*v)(i));
        }
        out += '\n';
    }
    return out;
}

inline WeightPair weights_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::vector<Vector> vecs;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto cells = split_csv_line(line);
        Vector v(Index(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i)
            v(Index(i)) = parse_double(cells[i]);
        vecs.push_back(std::move(v));
    }
    if (vecs.size() != 2)
        throw IoError("weights file must contain exactly two lines (row weights, column weights)");
    return WeightPair(vecs[0], vecs[1]);
}

inline WeightPair load_weights(const std::filesystem::path &p) { return weights_from_csv(read_text(p)); }
inline void save_weights(const std::filesystem::path &p, const WeightPair &w) { write_text(p, weights_to_csv(w)); }

// ---------------------------------------------------------------------------
// Observation sets: CSV "row,col,sign,y" plus a JSON sidecar at <csv>.json.

inline std::filesystem::path sidecar_path(const std::filesystem::path &csv) {
    return std::filesystem::path(csv.string() + ".json");
}

inline std::string observations_to_csv(const ObservationSet &obs) {
    std::string out = "row,col,sign,y\n";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto &s = obs.indices[i];
        out += std::to_string(s.row) + ',' + std::to_string(s.col) + ',' + std::to_string(s.sign) + ',' +
               format_double(obs.responses(Index(i))) + '\n';
    }
    return out;
}

/// `weights_ref` is "uniform" or a path to a weights CSV, stored as given.
inline nlohmann::json observation_sidecar(const ObservationSet &obs, const std::string &weights_ref) {
    return {{"rows", obs.rows},
            {"cols", obs.cols},
            {"n", obs.size()},
            {"noise_level", obs.noise_level},
            {"noise_model", to_string(obs.noise)},
            {"seed", obs.seed},
            {"weights", weights_ref}};
}

/// Writes the CSV and its sidecar. Non-uniform weights are written next to the
/// CSV as <csv>.weights.csv and referenced from the sidecar by file name.
inline void save_observations(const std::filesystem::path &csv, const ObservationSet &obs) {
    obs.validate();
    std::string ref = "uniform";
    if (!obs.weights.is_uniform()) {
        const std::filesystem::path wpath(csv.string() + ".weights.csv");
        save_weights(wpath, obs.weights);
        ref = wpath.filename().string();
    }
    write_text(csv, observations_to_csv(obs));
    write_text(sidecar_path(csv), observation_sidecar(obs, ref).dump(2) + "\n");
}

inline ObservationSet load_observations(const std::filesystem::path &csv) {
    const auto meta = nlohmann::json::parse(read_text(sidecar_path(csv)));
    ObservationSet obs;
    obs.rows = meta.at("rows").get<Index>();
    obs.cols = meta.at("cols").get<Index>();
    obs.noise_level = meta.at("noise_level").get<double>();
    obs.noise = parse_noise_model(meta.value("noise_model", std::string("gaussian")));
    obs.seed = meta.value("seed", std::uint64_t{0});
    const std::string ref = meta.value("weights", std::string("uniform"));
    if (ref == "uniform") {
        obs.weights = WeightPair::uniform(obs.rows, obs.cols);
    } else {
        std::filesystem::path wp(ref);
        if (wp.is_relative())
            wp = csv.parent_path() / wp;
        obs.weights = load_weights(wp);
    }

    std::istringstream in(read_text(csv));
    std::string line;
    if (!std::getline(in, line))
        throw IoError("observation CSV is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "row,col,sign,y")
        throw IoError("observation CSV header must be 'row,col,sign,y'");
    std::vector<double> ys;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4)
            throw IoError("observation CSV rows must have 4 fields");
        SampleIndex s{Index(parse_double(cells[0])), Index(parse_double(cells[1])), int(parse_double(cells[2]))};
        detail::check_index(s, obs.rows, obs.cols);
        obs.indices.push_back(s);
        ys.push_back(parse_double(cells[3]));
    }
    obs.responses = Eigen::Map<const Vector>(ys.data(), Index(ys.size()));
    if (meta.contains("n") && meta.at("n").get<std::size_t>() != obs.size())
        throw IoError("observation sidecar n disagrees with CSV row count");
    obs.validate();
    return obs;
}

} // namespace wmc
