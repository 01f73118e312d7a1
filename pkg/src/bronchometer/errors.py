"""Exception types shared across the toolkit.

Exit-code policy for the CLI: 2 for input problems (bad files, bad
arguments), 3 for pipeline failures on otherwise valid input.
"""


class BronchometerError(Exception):
    """Base class for every toolkit error."""

    exit_code = 3


class InputError(BronchometerError):
    """Problems with user-supplied files or arguments."""

    exit_code = 2


# volume loading

class MissingManifest(InputError):
    pass


class InvalidManifest(InputError):
    pass


class FrameCountMismatch(InputError):
    pass


class CorruptFrame(InputError):
    pass


class UnsupportedBitDepth(InputError):
    pass


# carina detection

class CropOutOfBounds(InputError):
    pass


class OverlappingBoxes(BronchometerError):
    pass


class NoCarinaFound(BronchometerError):
    pass


# lobe extraction

class DegenerateAngle(BronchometerError):
    pass


# measurement

class EmptyRegion(BronchometerError):
    pass


class AirwayNotFound(EmptyRegion):
    pass


class ArteryNotFound(EmptyRegion):
    pass


class AnisotropicSpacing(BronchometerError):
    pass


class EmptyBand(BronchometerError):
    pass


class NegativeWall(BronchometerError):
    pass


# phantoms

class SpecOverflow(InputError):
    pass


# sessions / service

class SessionNotFound(InputError):
    pass


class RoiOutOfBounds(InputError):
    pass
