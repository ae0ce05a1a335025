#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcpd/common.hpp"

namespace lcpd {

inline constexpr const char* kToolVersion = "0.1.0";

// Matrix text format: "p <dim>" then dim rows of dim values, %.17g.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in, const std::string& source = "<matrix>");
void write_matrix_file(const std::string& path, const Matrix& m);
Matrix read_matrix_file(const std::string& path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Flat key=value lines; '#' starts a comment. Throws InvalidConfig.
KeyValues parse_config(std::istream& in, const std::string& source = "<config>");
KeyValues read_config_file(const std::string& path);

struct Observation {
    std::optional<std::int64_t> t;
    Vector x;
    std::size_t line = 0;
};

/// Reads observations one per line, either NDJSON {"t":..,"x":[..]} or
/// headerless CSV, chosen by the first non-blank byte of the stream.
/// Malformed rows throw DataError naming the line.
class RowReader {
public:
    enum class Format { unknown, ndjson, csv };

    explicit RowReader(std::istream& in, Index expected_p = 0);

    std::optional<Observation> next();

    [[nodiscard]] Format format() const { return format_; }
    [[nodiscard]] Index p() const { return p_; }

private:
    Observation parse_ndjson(const std::string& text) const;
    Observation parse_csv(const std::string& text) const;

    std::istream& in_;
    Index p_;
    Format format_ = Format::unknown;
    std::size_t line_ = 0;
};

/// 64-bit FNV-1a of a file's bytes as 16 hex digits.
std::string file_hash(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
    std::vector<std::pair<std::string, std::string>> outputs;
    KeyValues settings;
    std::string version = kToolVersion;

    void add_input(const std::string& path);
    void add_output(const std::string& path);
    [[nodiscard]] std::string to_json() const;
    void write(const std::string& path) const;
};

}  // namespace lcpd
