#pragma once

#include <stdexcept>
#include <string>

namespace rifs {

/// Base of every error raised by the codec. what() is "<Kind>: <message>".
class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(kind) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define RIFS_DEFINE_ERROR(Name)                                               \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& message) : Error(#Name, message) {}      \
  }

// grid_model
RIFS_DEFINE_ERROR(DivisibilityError);
RIFS_DEFINE_ERROR(RangeError);
RIFS_DEFINE_ERROR(MinSizeError);

// rifs_core
RIFS_DEFINE_ERROR(NotContractive);
RIFS_DEFINE_ERROR(OutOfRect);
RIFS_DEFINE_ERROR(EmptyRow);
RIFS_DEFINE_ERROR(InvalidTransition);

// contractivity_field
RIFS_DEFINE_ERROR(SamplingError);
RIFS_DEFINE_ERROR(ShapeMismatch);

// encoder
RIFS_DEFINE_ERROR(EmptyPool);
RIFS_DEFINE_ERROR(ConfigError);

// decoder
RIFS_DEFINE_ERROR(CorruptCode);

// codec_io
RIFS_DEFINE_ERROR(FormatError);
RIFS_DEFINE_ERROR(DimensionError);
RIFS_DEFINE_ERROR(DimensionMismatch);
RIFS_DEFINE_ERROR(MagicMismatch);
RIFS_DEFINE_ERROR(VersionError);
RIFS_DEFINE_ERROR(TruncatedStream);
RIFS_DEFINE_ERROR(ChecksumError);

#undef RIFS_DEFINE_ERROR

}  // namespace rifs
