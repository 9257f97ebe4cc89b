#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perfimpact {

// Base of every error the library raises. name() is the stable error
// identifier surfaced by the CLI ("ParseError", "MissingTiming", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error("ParseError", message + " at " + std::to_string(line) + ":" +
                                std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

#define PERFIMPACT_DEFINE_ERROR(Type)                                    \
  class Type : public Error {                                           \
   public:                                                              \
    explicit Type(const std::string& message) : Error(#Type, message) {} \
  }

PERFIMPACT_DEFINE_ERROR(InvalidArgument);
PERFIMPACT_DEFINE_ERROR(IoError);
PERFIMPACT_DEFINE_ERROR(EmptyCorpus);
PERFIMPACT_DEFINE_ERROR(DirtyWorkingTree);
PERFIMPACT_DEFINE_ERROR(UnknownSnapshot);
PERFIMPACT_DEFINE_ERROR(GitError);
PERFIMPACT_DEFINE_ERROR(Timeout);
PERFIMPACT_DEFINE_ERROR(MalformedReport);
PERFIMPACT_DEFINE_ERROR(ConfigError);
PERFIMPACT_DEFINE_ERROR(MissingTiming);
PERFIMPACT_DEFINE_ERROR(EmptySnapshot);
PERFIMPACT_DEFINE_ERROR(SchemaMismatch);
PERFIMPACT_DEFINE_ERROR(TooFewRows);
PERFIMPACT_DEFINE_ERROR(DimensionMismatch);
PERFIMPACT_DEFINE_ERROR(NonFiniteInput);
PERFIMPACT_DEFINE_ERROR(LengthMismatch);
PERFIMPACT_DEFINE_ERROR(EmptyReport);
PERFIMPACT_DEFINE_ERROR(ModelFormatError);

#undef PERFIMPACT_DEFINE_ERROR

}  // namespace perfimpact
