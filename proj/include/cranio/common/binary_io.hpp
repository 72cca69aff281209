#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace cranio::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian stores");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

// 64-bit FNV-1a, used for cache content hashes.
std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size);
inline std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
    return fnv1a(bytes.data(), bytes.size());
}
std::string hex64(std::uint64_t value);

class ByteWriter {
public:
    template <class T>
    void put(T value) {
        const auto offset = bytes_.size();
        bytes_.resize(offset + sizeof(T));
        std::memcpy(bytes_.data() + offset, &value, sizeof(T));
    }
    void put_bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + size);
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : ByteReader(bytes.data(), bytes.size()) {}

    bool can_read(std::size_t n) const { return size_ - offset_ >= n; }
    std::size_t remaining() const { return size_ - offset_; }
    std::size_t offset() const { return offset_; }

    // Throws cranio::Error(malformed_file) when the buffer is exhausted.
    template <class T>
    T get() {
        require(sizeof(T));
        T value;
        std::memcpy(&value, data_ + offset_, sizeof(T));
        offset_ += sizeof(T);
        return value;
    }
    void skip(std::size_t n) {
        require(n);
        offset_ += n;
    }
    const std::uint8_t* cursor() const { return data_ + offset_; }

private:
    void require(std::size_t n) const;

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t offset_ = 0;
};

}  // namespace cranio::io
