#pragma once

#include <stdexcept>
#include <string>

namespace prosody {

// Base for every recoverable failure in the toolkit. Everything deriving
// from Error is a data/validation problem; the CLI maps these to exit 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// audio_io
struct MissingFile : Error { using Error::Error; };
struct UnsupportedEncoding : Error { using Error::Error; };
struct MalformedHeader : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

// features
struct BufferTooShort : Error { using Error::Error; };
struct FrameMismatch : Error { using Error::Error; };

// compare
struct NoVoicedFrames : Error { using Error::Error; };
struct SilentInput : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };

// manipulate
struct BoundsViolation : Error { using Error::Error; };

// learner
struct EmptyBatch : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct DegenerateGrid : Error { using Error::Error; };

// corpus
struct SchemaViolation : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };
struct BrokenPairing : Error { using Error::Error; };
struct HeaderMismatch : Error { using Error::Error; };
struct RowArity : Error { using Error::Error; };

// shared: a value that breaks a documented type invariant (NaN in features,
// negative spectral power, annotation count inconsistencies, ...)
struct InvariantViolation : Error { using Error::Error; };

}  // namespace prosody
