#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egofall {

enum class Errc {
    // dataset
    MissingColumn,
    DuplicateClipId,
    UnknownEnumValue,
    ActivityNotInClassList,
    EmptyManifest,
    InvalidRecord,
    DecoderSpawnFailure,
    StreamTruncated,
    BadStreamHeader,
    KTooLarge,
    KTooSmall,
    TooFewSubjects,
    // features
    EmptyFrame,
    SizeMismatch,
    InvalidParams,
    LengthMismatch,
    TooFewFrames,
    EmptySequence,
    SignalTooShort,
    UnsupportedSampleRate,
    BackendUnavailable,
    EmbeddingDimMismatch,
    MissingPrecomputedEntry,
    WrongCount,
    WrongDim,
    // models
    DegenerateLabels,
    NonFiniteFeature,
    DivergedLoss,
    DimMismatch,
    BadModelFile,
    EmptyBundle,
    InconsistentBundleShape,
    // evaluation / cli
    MissingFeatures,
    DegenerateFold,
    LeakageDetected,
    Empty,
    IoFailure,
    BadCacheFile,
    BadConfig,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::DuplicateClipId: return "DuplicateClipId";
    case Errc::UnknownEnumValue: return "UnknownEnumValue";
    case Errc::ActivityNotInClassList: return "ActivityNotInClassList";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::InvalidRecord: return "InvalidRecord";
    case Errc::DecoderSpawnFailure: return "DecoderSpawnFailure";
    case Errc::StreamTruncated: return "StreamTruncated";
    case Errc::BadStreamHeader: return "BadStreamHeader";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::KTooSmall: return "KTooSmall";
    case Errc::TooFewSubjects: return "TooFewSubjects";
    case Errc::EmptyFrame: return "EmptyFrame";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::TooFewFrames: return "TooFewFrames";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::UnsupportedSampleRate: return "UnsupportedSampleRate";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::EmbeddingDimMismatch: return "EmbeddingDimMismatch";
    case Errc::MissingPrecomputedEntry: return "MissingPrecomputedEntry";
    case Errc::WrongCount: return "WrongCount";
    case Errc::WrongDim: return "WrongDim";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::NonFiniteFeature: return "NonFiniteFeature";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::BadModelFile: return "BadModelFile";
    case Errc::EmptyBundle: return "EmptyBundle";
    case Errc::InconsistentBundleShape: return "InconsistentBundleShape";
    case Errc::MissingFeatures: return "MissingFeatures";
    case Errc::DegenerateFold: return "DegenerateFold";
    case Errc::LeakageDetected: return "LeakageDetected";
    case Errc::Empty: return "Empty";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadCacheFile: return "BadCacheFile";
    case Errc::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

/// All library failures are reported as egofall::Error; code() identifies the kind.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace egofall
