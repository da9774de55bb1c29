#pragma once

#include <stdexcept>
#include <string>

namespace grownup {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GROWNUP_DEFINE_ERROR(Name)         \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// numerics
GROWNUP_DEFINE_ERROR(ShapeMismatch);
GROWNUP_DEFINE_ERROR(NotScalarLoss);
GROWNUP_DEFINE_ERROR(NonFinite);

// html_graph
GROWNUP_DEFINE_ERROR(EmptyDocument);

// serialization
GROWNUP_DEFINE_ERROR(VersionMismatch);
GROWNUP_DEFINE_ERROR(CorruptRecord);

// corpus
GROWNUP_DEFINE_ERROR(MalformedUrl);
GROWNUP_DEFINE_ERROR(MissingGold);
GROWNUP_DEFINE_ERROR(SplitMismatch);

// pretrain / tasks
GROWNUP_DEFINE_ERROR(SingleSiteBatch);
GROWNUP_DEFINE_ERROR(ClassTooSmall);
GROWNUP_DEFINE_ERROR(ZeroEmbedding);
GROWNUP_DEFINE_ERROR(InvalidConfig);

// eval_metrics
GROWNUP_DEFINE_ERROR(DegenerateSample);
GROWNUP_DEFINE_ERROR(InvalidP);
GROWNUP_DEFINE_ERROR(EmptyCorpus);

#undef GROWNUP_DEFINE_ERROR

}  // namespace grownup
