#include "cli_common.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <system_error>

#include "pcd/errors.hpp"

namespace pcd::cli {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Csv::Csv(std::string_view schema, int version, const std::vector<std::string>& columns)
    : columns_(columns.size()) {
    text_ += "# ";
    text_ += schema;
    text_ += " v" + std::to_string(version) + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i > 0) text_ += ',';
        text_ += columns[i];
    }
    text_ += '\n';
}

Csv& Csv::cell(std::string_view text) {
    if (filled_ > 0) text_ += ',';
    text_ += text;
    ++filled_;
    return *this;
}

Csv& Csv::cell(double x) { return cell(std::string_view(fmt(x))); }

Csv& Csv::cell(long long x) { return cell(std::string_view(std::to_string(x))); }

void Csv::end_row() {
    if (filled_ != columns_) {
        throw std::logic_error("csv row has " + std::to_string(filled_) + " cells, expected " +
                               std::to_string(columns_));
    }
    text_ += '\n';
    filled_ = 0;
}

std::filesystem::path resolve_output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("PCD_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

std::string to_text(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

namespace {

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all{
        {"paper-fig3b", 512, 1.0e6, 1.0e4, 0.4, 0.6, std::nullopt, 16384},
        {"paper-table3-optimal", std::nullopt, 1.0e6, 1.0e2, 0.2, 2.5, 30, std::nullopt},
    };
    return all;
}

}  // namespace

const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : presets()) names.push_back(p.name);
    return names;
}

}  // namespace pcd::cli
