#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pcd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form; identical on every run.
std::string fmt(double x);

// Builds a CSV document in memory. The first line is a versioned schema
// comment, e.g. "# pcd.freqs v1".
class Csv {
public:
    Csv(std::string_view schema, int version, const std::vector<std::string>& columns);

    Csv& cell(double x);
    Csv& cell(long long x);
    Csv& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
    Csv& cell(int x) { return cell(static_cast<long long>(x)); }
    Csv& cell(std::string_view text);
    void end_row();

    const std::string& text() const { return text_; }

private:
    std::string text_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

// Directory for output files: the flag if set, else $PCD_OUTPUT_DIR, else ".".
std::filesystem::path resolve_output_dir(const std::string& flag);

// Writes the whole file or throws IoError. Creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Pretty JSON with a trailing newline.
std::string to_text(const nlohmann::ordered_json& doc);

// Named parameter sets for the CLI.
struct Preset {
    std::string name;
    std::optional<int> dim;
    std::optional<double> base;
    std::optional<double> base_prime;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::size_t> gamma;
    std::optional<long long> seq_len;
};

const Preset& find_preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace pcd::cli
