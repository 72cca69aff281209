#pragma once

#include <stdexcept>
#include <string>

namespace cranio {

// Every failure raised by the library carries a short machine-readable code
// (used verbatim in service error payloads) next to the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace errc {
inline constexpr const char* kIo = "io_error";
inline constexpr const char* kMalformed = "malformed_file";
inline constexpr const char* kUnsupported = "unsupported";
inline constexpr const char* kInvalidArgument = "invalid_argument";
inline constexpr const char* kDegenerate = "degenerate_correspondences";
inline constexpr const char* kOpenMesh = "open_mesh";
inline constexpr const char* kEmptyGeometry = "empty_geometry";
inline constexpr const char* kLatticeMismatch = "lattice_mismatch";
inline constexpr const char* kEmptyBand = "empty_band";
inline constexpr const char* kUnknownCase = "unknown_case";
inline constexpr const char* kStageOrder = "stage_order";
inline constexpr const char* kBusy = "busy";
inline constexpr const char* kNotReady = "not_ready";
}  // namespace errc

}  // namespace cranio
