#include "contsurv/error.hpp"

namespace contsurv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidDataset: return "InvalidDataset";
    case ErrorKind::TooFewDistinctValues: return "TooFewDistinctValues";
    case ErrorKind::UnresolvedSpec: return "UnresolvedSpec";
    case ErrorKind::ValueOutsideAllIntervals: return "ValueOutsideAllIntervals";
    case ErrorKind::SingularInformation: return "SingularInformation";
    case ErrorKind::MonotoneLikelihood: return "MonotoneLikelihood";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NoEvents: return "NoEvents";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::EmptyStratum: return "EmptyStratum";
    case ErrorKind::GridEmpty: return "GridEmpty";
    case ErrorKind::LambdaBeyondGrid: return "LambdaBeyondGrid";
    case ErrorKind::MissingKMReference: return "MissingKMReference";
    case ErrorKind::TooManyFailures: return "TooManyFailures";
    case ErrorKind::PipelineError: return "PipelineError";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::NonMonotoneEffect: return "NonMonotoneEffect";
    case ErrorKind::ShapeInconsistentAcrossTime: return "ShapeInconsistentAcrossTime";
    case ErrorKind::InconsistentGrid: return "InconsistentGrid";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace contsurv
