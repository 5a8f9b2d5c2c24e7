#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cbricks/app/config.hpp"
#include "cbricks/error.hpp"
#include "cbricks/io/ppm.hpp"

namespace cbricks::app {

namespace fs = std::filesystem;

class OutputExistsError : public Error {
public:
    using Error::Error;
};

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalid = 2, kOutputExists = 3 };

/// One command invocation: its output directory, metrics and oracle checks.
class Run {
public:
    Run(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

    const std::string& command() const { return command_; }
    std::uint64_t seed() const { return seed_; }
    const fs::path& dir() const { return dir_; }

    /// Creates <root>/<command>-<seed>. An existing non-empty directory is
    /// only replaced when `force` is set.
    void open_dir(const fs::path& root, bool force) {
        dir_ = root / (command_ + "-" + std::to_string(seed_));
        if (fs::exists(dir_)) {
            const bool empty = fs::is_directory(dir_) && fs::is_empty(dir_);
            if (!empty && !force) throw OutputExistsError(dir_.string() + " already exists (use --force to overwrite)");
            fs::remove_all(dir_);
        }
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    std::ofstream open(const std::string& name, bool binary = false) const {
        const fs::path p = path(name);
        fs::create_directories(p.parent_path());
        std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
        require(static_cast<bool>(os), "cannot open " + p.string() + " for writing");
        return os;
    }

    void write_ppm(const std::string& name, const io::Raster& img) const {
        auto os = open(name, true);
        io::write_ppm(os, img);
    }

    template <typename T>
    void metric(const std::string& key, const T& value) {
        std::ostringstream os;
        if constexpr (std::is_same_v<T, bool>) os << (value ? "true" : "false");
        else if constexpr (std::is_floating_point_v<T>) os << io::format_double(value);
        else os << value;
        summary_.emplace_back(key, os.str());
    }

    void check(const std::string& name, bool ok) {
        checks_.emplace_back(name, ok);
        metric(name, ok);
    }

    /// First failed check, or empty.
    std::string first_failure() const {
        for (const auto& [name, ok] : checks_)
            if (!ok) return name;
        return {};
    }

    std::string summary_text() const {
        std::ostringstream os;
        os << "command=" << command_ << '\n' << "seed=" << seed_ << '\n';
        for (const auto& [k, v] : summary_) os << k << '=' << v << '\n';
        os << "status=" << (first_failure().empty() ? "ok" : "fail") << '\n';
        return os.str();
    }

    /// Writes summary.txt and the resolved config.txt.
    void finish(const Config& cfg) const {
        open("summary.txt") << summary_text();
        open("config.txt") << cfg.text();
    }

    const std::vector<std::pair<std::string, std::string>>& summary() const { return summary_; }

private:
    std::string command_;
    std::uint64_t seed_;
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> summary_;
    std::vector<std::pair<std::string, bool>> checks_;
};

}  // namespace cbricks::app
