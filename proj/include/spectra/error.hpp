#ifndef SPECTRA_ERROR_HPP
#define SPECTRA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace spectra {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// image_io
struct FileNotFound : Error { using Error::Error; };
struct DecodeFailure : Error { using Error::Error; };
struct UnsupportedBitDepth : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct MissingClassDirectory : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// dft_core
struct SizeExceeded : Error { using Error::Error; };
struct NonrealResult : Error { using Error::Error; };
struct AlreadyCentered : Error { using Error::Error; };
struct AlreadyUncentered : Error { using Error::Error; };

// spectral_enhance
struct InvalidCutoff : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct KernelTooLarge : Error { using Error::Error; };
struct InvalidGamma : Error { using Error::Error; };

// micro_cnn
struct ChannelMismatch : Error { using Error::Error; };
struct OddDimension : Error { using Error::Error; };
struct InvalidRate : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct StaleIntermediates : Error { using Error::Error; };

// eval_metrics
struct EmptyInput : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };
struct EmptyMatrix : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };
struct DegenerateClass : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct MissingColumn : Error { using Error::Error; };

} // namespace spectra

#endif
