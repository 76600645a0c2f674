// Copyright 2026 The regrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REGRANK_ERRORS_H_
#define REGRANK_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regrank {

// Root of all library errors. Data errors (bad corpus, bad input) and backend
// errors are kept in separate subtrees so the CLI can map them to distinct
// exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// Raised while loading a corpus file. line is 1-based, 0 when the problem is
// not tied to a single record.
class CorpusError : public DataError {
 public:
  CorpusError(const std::string& what, std::size_t line = 0)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what
                           : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class PreconditionError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyVisualContext : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientSupport : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class EmptyReference : public DataError {
 public:
  using DataError::DataError;
};

class ZeroVector : public DataError {
 public:
  using DataError::DataError;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class EmptyGeneration : public BackendError {
 public:
  using BackendError::BackendError;
};

class EmptyDescription : public BackendError {
 public:
  using BackendError::BackendError;
};

class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Human evaluation session errors.
class SessionError : public Error {
 public:
  using Error::Error;
};

class EligibilityViolation : public SessionError {
 public:
  using SessionError::SessionError;
};
class SessionComplete : public SessionError {
 public:
  using SessionError::SessionError;
};
class DuplicateAnswer : public SessionError {
 public:
  using SessionError::SessionError;
};
class InvalidChoice : public SessionError {
 public:
  using SessionError::SessionError;
};
class OutOfOrder : public SessionError {
 public:
  using SessionError::SessionError;
};
class IncompleteSession : public SessionError {
 public:
  using SessionError::SessionError;
};
class ConsentRequired : public SessionError {
 public:
  using SessionError::SessionError;
};
class UnknownSession : public SessionError {
 public:
  using SessionError::SessionError;
};

}  // namespace regrank

#endif  // REGRANK_ERRORS_H_
