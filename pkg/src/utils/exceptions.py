class MEBMError(Exception):
	exit_code = 2


class ConfigError(MEBMError, ValueError):
	pass


class DimensionError(MEBMError, ValueError):
	pass


class DegenerateInputError(MEBMError, ValueError):
	pass


class EmptySelectionError(MEBMError, ValueError):
	pass


class RecordingFormatError(MEBMError, ValueError):
	pass


class HeaderError(RecordingFormatError):
	pass


class PayloadLengthError(RecordingFormatError):
	pass


class ChannelNameError(RecordingFormatError):
	pass


class CheckpointFormatError(MEBMError, ValueError):
	pass


class NumericError(MEBMError, ArithmeticError):
	exit_code = 4


def exit_code_for(error: BaseException) -> int:
	"""
	Map an exception raised by the pipeline to the documented CLI exit code.

	Args:
	    error (BaseException): The exception that stopped a command.

	Returns:
	    int: 2 for configuration/input errors, 3 for I/O failures, 4 for numeric failures, 1 otherwise.
	"""
	if isinstance(error, MEBMError):
		return error.exit_code
	if isinstance(error, OSError):
		return 3
	if isinstance(error, ValueError):
		return 2
	return 1
