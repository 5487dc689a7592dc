"""Exception types shared across the toolkit."""


class GeovecError(Exception):
    """Base class for every error raised by this package."""


# -- geodesy ----------------------------------------------------------------

class RangeError(GeovecError):
    """A coordinate or parsed value falls outside its legal range."""


class DegenerateBearing(GeovecError):
    """Initial bearing requested between two identical coordinates."""


# -- OSM ingestion ----------------------------------------------------------

class UpstreamUnavailable(GeovecError):
    """The geocoding or place-search service failed (network or HTTP error)."""


class NoAddressFound(GeovecError):
    """Reverse geocoding returned no address (e.g. open ocean)."""


class FixtureMiss(GeovecError):
    """Offline mode was asked for a query not covered by the fixture file."""


class CacheCorrupt(GeovecError):
    """A cache entry exists but cannot be read."""


# -- prompt building --------------------------------------------------------

class MissingSection(GeovecError):
    """A prompt variant requires an input section that was not supplied."""


# -- embedding --------------------------------------------------------------

class EmptyTokenMatrix(GeovecError):
    """Mean pooling was asked to pool zero token rows."""


class ProviderUnavailable(GeovecError):
    """The embedding provider could not be reached after retries."""


class DimMismatch(GeovecError):
    """A matrix or vector does not have the declared dimension."""


class OddDimension(GeovecError):
    """Random Fourier features require an even output dimension."""


# -- embedding store --------------------------------------------------------

class StoreError(GeovecError):
    """Base class for embedding store I/O failures."""


class BadMagic(StoreError):
    """The store file does not start with the expected magic bytes."""


class VersionMismatch(StoreError):
    """The store file declares an unsupported format version."""


class TruncatedFile(StoreError):
    """The store file ends before all declared payload bytes."""


class ChecksumMismatch(StoreError):
    """The store file checksum does not match its contents."""


# -- prediction -------------------------------------------------------------

class SingularSystem(GeovecError):
    """The ridge normal equations are singular beyond jitter recovery."""


class DegenerateTarget(GeovecError):
    """R-squared is undefined because the target vector is constant."""


class Misalignment(GeovecError):
    """Two id-aligned structures do not cover the same node ids."""


class NodeMismatch(GeovecError):
    """Representations to concatenate do not share identical node ids."""


class OverlapDetected(GeovecError):
    """Train and test id lists overlap."""


# -- data ingestion ---------------------------------------------------------

class ParseError(GeovecError):
    """A data file is malformed; the message names the offending line."""


class DuplicateId(GeovecError):
    """A node id appears more than once."""


class NonMonotonicTimestamps(GeovecError):
    """Time series timestamps are not strictly increasing."""


class MissingValue(GeovecError):
    """A time series cell is empty."""


class OutOfBounds(GeovecError):
    """A coordinate lies outside the raster grid."""


class AllNoData(GeovecError):
    """Every sampled raster pixel carries the nodata sentinel."""


class TooShort(GeovecError):
    """A time series split is too short for the requested windows."""


# -- forecasting ------------------------------------------------------------

class NonFiniteLoss(GeovecError):
    """Training produced a non-finite loss value."""
