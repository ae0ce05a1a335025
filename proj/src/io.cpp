#include "lcpd/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace lcpd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

std::string format_17g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string at_line(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_matrix(std::ostream& out, const Matrix& m) {
    require_dims(m.rows() == m.cols(), "write_matrix: matrix must be square");
    out << "p " << m.rows() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_17g(m(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    Index p = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream header(line);
        std::string tag;
        long long dim = -1;
        std::string rest;
        if (!(header >> tag >> dim) || tag != "p" || dim < 1 || (header >> rest)) {
            throw DataError(at_line(source, lineno) + "expected header 'p <dim>'");
        }
        p = static_cast<Index>(dim);
        break;
    }
    if (p < 0) throw DataError(source + ": empty matrix file");

    Matrix m(p, p);
    Index row = 0;
    while (row < p && std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream fields(line);
        std::string token;
        Index col = 0;
        while (fields >> token) {
            double v = 0.0;
            if (col >= p || !parse_double(token, v)) {
                throw DataError(at_line(source, lineno) + "malformed matrix row");
            }
            m(row, col++) = v;
        }
        if (col != p) throw DataError(at_line(source, lineno) + "expected " + std::to_string(p) + " values");
        ++row;
    }
    if (row != p) throw DataError(source + ": expected " + std::to_string(p) + " matrix rows");
    return m;
}

void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot open '" + path + "' for writing");
    write_matrix(out, m);
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open matrix file '" + path + "'");
    return read_matrix(in, path);
}

KeyValues parse_config(std::istream& in, const std::string& source) {
    KeyValues out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidConfig(at_line(source, lineno) + "expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw InvalidConfig(at_line(source, lineno) + "empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

RowReader::RowReader(std::istream& in, Index expected_p) : in_(in), p_(expected_p) {}

std::optional<Observation> RowReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        const std::string text = trim(line);
        if (text.empty()) continue;
        if (format_ == Format::unknown) format_ = text.front() == '{' ? Format::ndjson : Format::csv;
        Observation obs = format_ == Format::ndjson ? parse_ndjson(text) : parse_csv(text);
        obs.line = line_;
        if (p_ == 0) p_ = obs.x.size();
        if (obs.x.size() != p_) {
            throw DataError("line " + std::to_string(line_) + ": expected " + std::to_string(p_) + " values, got " +
                            std::to_string(obs.x.size()));
        }
        return obs;
    }
    return std::nullopt;
}

Observation RowReader::parse_ndjson(const std::string& text) const {
    const std::string where = "line " + std::to_string(line_) + ": ";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        throw DataError(where + "malformed JSON row");
    }
    if (!j.is_object() || !j.contains("x") || !j["x"].is_array()) {
        throw DataError(where + "expected an object with an array field \"x\"");
    }
    Observation obs;
    if (j.contains("t")) {
        if (!j["t"].is_number_integer()) throw DataError(where + "field \"t\" must be an integer");
        obs.t = j["t"].get<std::int64_t>();
    }
    const auto& xs = j["x"];
    obs.x.resize(static_cast<Index>(xs.size()));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!xs[k].is_number()) throw DataError(where + "non-numeric entry in \"x\"");
        obs.x(static_cast<Index>(k)) = xs[k].get<double>();
    }
    if (obs.x.size() == 0) throw DataError(where + "empty observation");
    return obs;
}

Observation RowReader::parse_csv(const std::string& text) const {
    const std::string where = "line " + std::to_string(line_) + ": ";
    std::vector<double> values;
    std::string field;
    std::istringstream fields(text);
    while (std::getline(fields, field, ',')) {
        double v = 0.0;
        if (!parse_double(field, v)) throw DataError(where + "malformed CSV value '" + trim(field) + "'");
        values.push_back(v);
    }
    if (!text.empty() && text.back() == ',') throw DataError(where + "trailing comma");
    Observation obs;
    obs.x = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    return obs;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfig("cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

void RunManifest::add_input(const std::string& path) { inputs.emplace_back(path, file_hash(path)); }

void RunManifest::add_output(const std::string& path) { outputs.emplace_back(path, file_hash(path)); }

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["master_seed"] = master_seed;
    j["version"] = version;
    auto files = [](const std::vector<std::pair<std::string, std::string>>& list) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [path, hash] : list) arr.push_back({{"path", path}, {"fnv1a64", hash}});
        return arr;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : settings) s[k] = v;
    j["settings"] = s;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidConfig("cannot open '" + path + "' for writing");
    out << to_json();
}

}  // namespace lcpd
