#include "deepfeat/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "json.hpp"

#include "deepfeat/error.hpp"

namespace deepfeat {

namespace {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                            : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s, std::string_view source) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw InvalidData(std::string(source) + ": cannot parse number '" + s + "'");
    return v;
}

}  // namespace

void write_file_atomically(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

std::optional<std::size_t> CsvTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
    CsvTable t;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == text.npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw InvalidData(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(t.header.size()) + " fields, got " +
                              std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw InvalidData(std::string(source) + ": empty CSV");
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

std::string format_full(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string feature_csv(const FeatureMatrix& m) {
    std::string out;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out += ',';
        out += m.names[j];
    }
    if (m.has_labels()) out += (m.cols() ? "," : "") + std::string(kLabelColumn);
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_full(m.values(i, j));
        }
        if (m.has_labels()) out += (m.cols() ? "," : "") + std::to_string(m.labels[i]);
        out += '\n';
    }
    return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    write_file_atomically(path, feature_csv(m));
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& schema_path) {
    const CsvTable t = read_csv(path);
    nlohmann::json schema = nlohmann::json::object();
    if (schema_path) {
        std::ifstream in(*schema_path);
        if (!in) throw IoError("cannot open " + schema_path->string());
        try {
            in >> schema;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidData(schema_path->string() + ": " + e.what());
        }
        if (!schema.is_object()) throw InvalidData(schema_path->string() + ": schema must be an object");
    }

    const auto label_col = t.column_index(kLabelColumn);
    FeatureMatrix m;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (!label_col || c != *label_col) feature_cols.push_back(c);

    const auto n = static_cast<Eigen::Index>(t.rows.size());
    m.values.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
    for (Eigen::Index i = 0; i < n; ++i)
        for (std::size_t k = 0; k < feature_cols.size(); ++k)
            m.values(i, static_cast<Eigen::Index>(k)) =
                parse_double(t.rows[i][feature_cols[k]], path.string());
    if (label_col) {
        m.labels.reserve(t.rows.size());
        for (const auto& row : t.rows)
            m.labels.push_back(static_cast<int>(parse_double(row[*label_col], path.string())));
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
        const std::string& name = t.header[feature_cols[k]];
        m.names.push_back(name);
        ColumnKind kind;
        if (schema.contains(name)) {
            const auto& entry = schema[name];
            const std::string type = entry.is_string() ? entry.get<std::string>()
                                                       : entry.value("kind", "continuous");
            if (type == "categorical") {
                int card = entry.is_object() ? entry.value("cardinality", 0) : 0;
                if (n > 0)
                    card = std::max(card, static_cast<int>(m.values.col(k).maxCoeff()) + 1);
                kind = ColumnKind::categorical(card);
            } else if (type != "continuous") {
                throw InvalidData("schema kind for '" + name + "' must be continuous or categorical");
            }
        }
        m.kinds.push_back(kind);
    }
    m.validate();
    return m;
}

std::string schema_json(const FeatureMatrix& m) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        j[m.names[c]] = m.kinds[c].is_categorical() ? "categorical" : "continuous";
    return j.dump(1) + "\n";
}

void write_schema(const std::filesystem::path& path, const FeatureMatrix& m) {
    write_file_atomically(path, schema_json(m));
}

VoteTable read_votes_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    VoteTable out;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        const std::string& h = t.header[c];
        if (h.rfind("vote_", 0) == 0) {
            cols.push_back(c);
            out.classes.push_back(static_cast<int>(parse_double(h.substr(5), path.string())));
        }
    }
    if (cols.empty()) throw InvalidData(path.string() + ": no vote_<label> columns");
    out.votes.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t k = 0; k < cols.size(); ++k)
            out.votes(i, k) = parse_double(t.rows[i][cols[k]], path.string());
    return out;
}

std::string votes_csv(const VoteTable& t, const std::vector<int>& predicted) {
    std::string out = "row,predicted";
    for (int c : t.classes) out += ",vote_" + std::to_string(c);
    out += '\n';
    for (Eigen::Index i = 0; i < t.votes.rows(); ++i) {
        out += std::to_string(i) + ',' + std::to_string(predicted[i]);
        for (Eigen::Index k = 0; k < t.votes.cols(); ++k) out += ',' + format_full(t.votes(i, k));
        out += '\n';
    }
    return out;
}

}  // namespace deepfeat
