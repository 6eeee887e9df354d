#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace t2m {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Sequence too short for the requested operation (e.g. velocity of one frame).
class LengthError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing model weights, embedding tables and similar external resources.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible file (archive, checkpoint, npy, json).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint incompatible with the requested model, skeleton or embedder.
class CheckpointError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Corpus ingestion failure; carries every offending motion id.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::vector<std::string> ids)
      : Error(what), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

}  // namespace t2m
