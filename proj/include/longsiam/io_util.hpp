#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace longsiam {

/// Writes bytes to `path` via a sibling temp file and an atomic rename, so a
/// failed run never leaves a partially written output behind.
inline void atomic_write_file(const std::filesystem::path& path, const void* data, size_t size) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!os) {
            os.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& text) {
    atomic_write_file(path, text.data(), text.size());
}

inline void atomic_write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    atomic_write_file(path, bytes.data(), bytes.size());
}

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    const std::streamsize size = is.tellg();
    is.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    if (size > 0) is.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!is) throw std::runtime_error("read failed for " + path.string());
    return bytes;
}

/// Fixed-format float for CSV output: shortest round-trippable representation
/// keeps reports byte-stable across identical runs.
std::string format_number(double v);

/// Splits one CSV line on commas; no quoting (fields here never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace longsiam
