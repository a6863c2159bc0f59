#include "avsl/errors.hpp"

namespace avsl {

std::string_view error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::usage: return "Usage";
        case ErrorKind::io: return "Io";
        case ErrorKind::bad_magic: return "BadMagic";
        case ErrorKind::bad_version: return "BadVersion";
        case ErrorKind::truncated_file: return "TruncatedFile";
        case ErrorKind::size_mismatch: return "SizeMismatch";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::shape_mismatch: return "ShapeMismatch";
        case ErrorKind::empty_input: return "EmptyInput";
        case ErrorKind::empty_map: return "EmptyMap";
        case ErrorKind::empty_gallery: return "EmptyGallery";
        case ErrorKind::too_few_samples: return "TooFewSamples";
        case ErrorKind::bad_area: return "BadArea";
        case ErrorKind::bad_k: return "BadK";
        case ErrorKind::batch_too_small: return "BatchTooSmall";
        case ErrorKind::length_mismatch: return "LengthMismatch";
        case ErrorKind::bad_transform: return "BadTransform";
        case ErrorKind::unknown_class: return "UnknownClass";
        case ErrorKind::too_short: return "TooShort";
        case ErrorKind::placement_failure: return "PlacementFailure";
        case ErrorKind::config_error: return "ConfigError";
        case ErrorKind::zero_norm: return "ZeroNorm";
        case ErrorKind::nan_input: return "NaNInput";
    }
    return "Unknown";
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::usage:
            return 1;
        case ErrorKind::io:
        case ErrorKind::bad_magic:
        case ErrorKind::bad_version:
        case ErrorKind::truncated_file:
        case ErrorKind::size_mismatch:
            return 2;
        case ErrorKind::zero_norm:
        case ErrorKind::nan_input:
            return 4;
        default:
            return 3;
    }
}

} // namespace avsl
