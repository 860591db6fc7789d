#pragma once

#include <stdexcept>
#include <string>

namespace logodet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input / file problems. Exit code 1 territory for the CLI.
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct InvalidFractions : Error { using Error::Error; };

// Domain errors.
struct TemplateTooLarge : Error { using Error::Error; };
struct ImageTooSmall : Error { using Error::Error; };
struct RankOutOfRange : Error { using Error::Error; };
struct UnknownClass : Error { using Error::Error; };
struct EmptyGroundTruth : Error { using Error::Error; };
struct NoGroundTruth : Error { using Error::Error; };
struct LabelMismatch : Error { using Error::Error; };
struct DegenerateClass : Error { using Error::Error; };
struct NoForegroundRoIs : Error { using Error::Error; };

// Filesystem / OS failures. Exit code 2 territory.
struct IoError : Error { using Error::Error; };

}  // namespace logodet
