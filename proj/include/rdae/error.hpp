#pragma once

#include <stdexcept>
#include <string>

namespace rdae {

// Every failure the library reports carries one of these codes so callers
// (the CLI in particular) can map them to exit statuses without string
// matching.
enum class Errc {
  kShape,        // tensor shape does not match what an operation requires
  kInvalidArg,   // argument outside its documented domain
  kIo,           // file could not be opened, read or written
  kDecode,       // image file could not be decoded
  kConfig,       // configuration file syntax or key error
  kEmpty,        // empty dataset / split
  kNumeric,      // NaN or Inf produced during training
  kTruncated,    // a serialized artifact ended before a required section
  kFormat,       // bad magic, inconsistent length fields, invalid tables
  kVersion,      // serialized artifact written by an unsupported version
  kChecksum,     // CRC over the artifact does not match
  kModelMismatch,// bitstream was produced by a different model
  kSymbol,       // entropy coder asked to encode a symbol it has no code for
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rdae
