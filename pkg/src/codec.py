"""
MIL-STD-1553 word and message representation.

Command words are encoded bit-exactly (16 content bits, sync and parity are
physical layer). Monitored messages are kept as MessageRecord values and
logged one JSON object per line.
"""
import json
import logging

from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)

BROADCAST_ADDRESS = 31
MODE_CODE_SUBADDRESSES = (0, 31)
MAX_DATA_WORDS = 32

MODE_TRANSMIT_STATUS = 0b00010
MODE_TRANSMIT_VECTOR_WORD = 0b10000
MODE_SYNCHRONIZE_WITH_DATA = 0b10001

class FieldRangeError(ValueError):

    def __init__(self, field, value, low, high):

        super().__init__(f"{field}={value!r} out of range [{low}, {high}]")
        self.field = field

class LogFormatError(ValueError):

    def __init__(self, lineno, reason):

        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno

class LogOrderError(ValueError):
    pass

class Channel(str, Enum):
    A = "A"
    B = "B"

class TransferType(str, Enum):
    BC_TO_RT = "BC_to_RT"
    RT_TO_BC = "RT_to_BC"
    RT_TO_RT = "RT_to_RT"
    MODE_CODE = "ModeCode"
    BROADCAST = "Broadcast"

class Label(str, Enum):
    BENIGN = "Benign"
    ANOMALY = "Anomaly"
    UNLABELED = "Unlabeled"

def _check_range(name, value, low, high):

    if isinstance(value, bool) or not isinstance(value, int) or not low <= value <= high:
        raise FieldRangeError(name, value, low, high)

def _check_optional(name, value, low, high):

    if value is not None:
        _check_range(name, value, low, high)

# ---------------------------------------------------------------------- COMMAND WORDS

@dataclass(frozen=True)
class CommandWordFields:

    terminal_address: int
    transmit_receive: int
    subaddress_mode: int
    word_count_or_mode_code: int

    def __post_init__(self):

        _check_range("terminal_address", self.terminal_address, 0, 31)
        _check_range("transmit_receive", self.transmit_receive, 0, 1)
        _check_range("subaddress_mode", self.subaddress_mode, 0, 31)
        _check_range("word_count_or_mode_code", self.word_count_or_mode_code, 0, 31)

    @property
    def is_broadcast(self):
        return self.terminal_address == BROADCAST_ADDRESS

    @property
    def is_mode_code(self):
        return self.subaddress_mode in MODE_CODE_SUBADDRESSES

    @property
    def data_word_count(self):
        """ number of data words announced, 0 encodes 32 outside mode codes """
        if self.is_mode_code:
            return None

        return self.word_count_or_mode_code or MAX_DATA_WORDS

def encode_command_word(fields):
    """ TA(5) | T/R(1) | subaddress/mode(5) | word count/mode code(5), MSB first """

    if not isinstance(fields, CommandWordFields):
        fields = CommandWordFields(*fields)

    return (fields.terminal_address << 11) | (fields.transmit_receive << 10) \
        | (fields.subaddress_mode << 5) | fields.word_count_or_mode_code

def decode_command_word(payload):

    _check_range("payload", payload, 0, 0xFFFF)

    return CommandWordFields(
        terminal_address=(payload >> 11) & 0x1F,
        transmit_receive=(payload >> 10) & 0x1,
        subaddress_mode=(payload >> 5) & 0x1F,
        word_count_or_mode_code=payload & 0x1F,
    )

# ---------------------------------------------------------------------- MESSAGES

@dataclass(frozen=True)
class MessageId:
    """ the seven command features identifying a message kind, None is N/A """

    src_terminal: Optional[int]
    src_subaddress: Optional[int]
    dst_terminal: Optional[int]
    dst_subaddress: Optional[int]
    channel: Channel
    word_count: int
    is_mode_code: bool

    def __post_init__(self):

        object.__setattr__(self, "channel", Channel(self.channel))

        # 31 is the broadcast address, never a concrete terminal
        _check_optional("src_terminal", self.src_terminal, 0, BROADCAST_ADDRESS - 1)
        _check_optional("src_subaddress", self.src_subaddress, 0, 31)
        _check_optional("dst_terminal", self.dst_terminal, 0, BROADCAST_ADDRESS - 1)
        _check_optional("dst_subaddress", self.dst_subaddress, 0, 31)
        _check_range("word_count", self.word_count, 0, MAX_DATA_WORDS)

        if not isinstance(self.is_mode_code, bool):
            raise FieldRangeError("is_mode_code", self.is_mode_code, False, True)

        if (self.src_terminal is None) != (self.src_subaddress is None):
            raise ValueError("src_terminal and src_subaddress must both be set or both be N/A")

        if self.dst_subaddress is None and self.dst_terminal is not None:
            raise ValueError("dst_subaddress is N/A but dst_terminal is set")

        if self.src_terminal is None and self.dst_subaddress is None:
            raise ValueError("a message needs a source or a destination terminal")

        if self.is_mode_code:

            if self.src_terminal is not None and self.dst_subaddress is not None:
                raise ValueError("a mode code addresses a single terminal")

            # transmit mode codes with data have the RT as source, all others address the destination
            if self.mode_subaddress not in MODE_CODE_SUBADDRESSES:
                raise ValueError("mode codes use subaddress 0 or 31")

            if self.word_count > 1:
                raise ValueError("mode codes carry at most one data word")

    @property
    def mode_subaddress(self):
        """ subaddress field of the mode command, None outside mode codes """
        if not self.is_mode_code:
            return None

        return self.src_subaddress if self.src_terminal is not None else self.dst_subaddress

    def sort_key(self):

        key = []
        for f in fields(self):
            value = getattr(self, f.name)
            key.append(-1 if value is None else value.value if isinstance(value, Enum) else int(value))

        return tuple(key)

    def to_dict(self):

        return {
            "src_terminal": self.src_terminal,
            "src_subaddress": self.src_subaddress,
            "dst_terminal": self.dst_terminal,
            "dst_subaddress": self.dst_subaddress,
            "channel": self.channel.value,
            "word_count": self.word_count,
            "is_mode_code": self.is_mode_code,
        }

    @classmethod
    def from_dict(cls, data):

        return cls(
            src_terminal=data.get("src_terminal"),
            src_subaddress=data.get("src_subaddress"),
            dst_terminal=data.get("dst_terminal"),
            dst_subaddress=data.get("dst_subaddress"),
            channel=data.get("channel", "A"),
            word_count=data["word_count"],
            is_mode_code=data.get("is_mode_code", False),
        )

def transfer_type_of(message_id):
    """ transfer format implied by which endpoints are the BC """

    if message_id.dst_terminal is None and message_id.dst_subaddress is not None:
        return TransferType.BROADCAST

    if message_id.is_mode_code:
        return TransferType.MODE_CODE

    if message_id.src_terminal is None:
        return TransferType.BC_TO_RT

    if message_id.dst_terminal is None:
        return TransferType.RT_TO_BC

    return TransferType.RT_TO_RT

@dataclass(frozen=True)
class MessageRecord:

    timestamp_us: int
    channel: Channel
    transfer_type: TransferType
    src_terminal: Optional[int]
    src_subaddress: Optional[int]
    dst_terminal: Optional[int]
    dst_subaddress: Optional[int]
    word_count: int
    is_mode_code: bool
    truth_label: Label = Label.UNLABELED
    predicted_label: Optional[Label] = None

    def __post_init__(self):

        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "transfer_type", TransferType(self.transfer_type))
        object.__setattr__(self, "truth_label", Label(self.truth_label))

        if self.predicted_label is not None:
            object.__setattr__(self, "predicted_label", Label(self.predicted_label))

        if isinstance(self.timestamp_us, bool) or not isinstance(self.timestamp_us, int) or self.timestamp_us < 0:
            raise FieldRangeError("timestamp_us", self.timestamp_us, 0, "inf")

        # validates addresses, word count and the N/A pairing
        message_id = message_id_of(self)

        if transfer_type_of(message_id) is not self.transfer_type:
            raise ValueError(f"addressing does not match transfer type {self.transfer_type.value}")

def message_id_of(record):
    """ projection on the command features, timing and labels never enter """

    return MessageId(
        src_terminal=record.src_terminal,
        src_subaddress=record.src_subaddress,
        dst_terminal=record.dst_terminal,
        dst_subaddress=record.dst_subaddress,
        channel=record.channel,
        word_count=record.word_count,
        is_mode_code=record.is_mode_code,
    )

def record_for(message_id, timestamp_us, truth_label=Label.BENIGN):

    return MessageRecord(
        timestamp_us=int(timestamp_us),
        channel=message_id.channel,
        transfer_type=transfer_type_of(message_id),
        src_terminal=message_id.src_terminal,
        src_subaddress=message_id.src_subaddress,
        dst_terminal=message_id.dst_terminal,
        dst_subaddress=message_id.dst_subaddress,
        word_count=message_id.word_count,
        is_mode_code=message_id.is_mode_code,
        truth_label=truth_label,
    )

def command_words(record):
    """ command word(s) the BC puts on the bus for this message """

    wc = record.word_count % MAX_DATA_WORDS

    if record.transfer_type is TransferType.RT_TO_RT:
        return [
            CommandWordFields(record.dst_terminal, 0, record.dst_subaddress, wc),
            CommandWordFields(record.src_terminal, 1, record.src_subaddress, wc),
        ]

    if record.transfer_type is TransferType.RT_TO_BC:
        return [CommandWordFields(record.src_terminal, 1, record.src_subaddress, wc)]

    if record.is_mode_code and record.src_terminal is not None:
        return [CommandWordFields(record.src_terminal, 1, record.src_subaddress, MODE_TRANSMIT_VECTOR_WORD)]

    terminal = BROADCAST_ADDRESS if record.dst_terminal is None else record.dst_terminal

    if record.is_mode_code:
        # records keep no mode code value, stand in the usual one for the data direction
        if record.word_count:
            return [CommandWordFields(terminal, 0, record.dst_subaddress, MODE_SYNCHRONIZE_WITH_DATA)]

        return [CommandWordFields(terminal, 1, record.dst_subaddress, MODE_TRANSMIT_STATUS)]

    if record.src_terminal is not None:
        # RT to RTs broadcast
        return [
            CommandWordFields(terminal, 0, record.dst_subaddress, wc),
            CommandWordFields(record.src_terminal, 1, record.src_subaddress, wc),
        ]

    return [CommandWordFields(terminal, 0, record.dst_subaddress, wc)]

def command_word_hex(record):
    """ command word(s) of `record` as 4-digit hex, in bus order """
    return " ".join(f"{encode_command_word(w):04x}" for w in command_words(record))

# ---------------------------------------------------------------------- LOG FILES

LOG_FIELDS = (
    "timestamp_us",
    "channel",
    "transfer_type",
    "src_terminal",
    "src_subaddress",
    "dst_terminal",
    "dst_subaddress",
    "word_count",
    "is_mode_code",
    "truth_label",
)

def record_to_line(record):

    obj = {}
    for name in LOG_FIELDS:
        value = getattr(record, name)
        obj[name] = value.value if isinstance(value, Enum) else value

    if record.predicted_label is not None:
        obj["predicted_label"] = record.predicted_label.value

    return json.dumps(obj, separators=(",", ":"))

def record_from_line(line, lineno=0):

    try:
        obj = json.loads(line)

    except json.JSONDecodeError as e:
        raise LogFormatError(lineno, f"not a JSON object ({e.msg})")

    if not isinstance(obj, dict):
        raise LogFormatError(lineno, "not a JSON object")

    missing = [name for name in LOG_FIELDS if name not in obj]
    if missing:
        raise LogFormatError(lineno, f"missing fields {missing}")

    extra = set(obj) - set(LOG_FIELDS) - {"predicted_label"}
    if extra:
        raise LogFormatError(lineno, f"unknown fields {sorted(extra)}")

    try:
        return MessageRecord(**obj)

    except ValueError as e:
        raise LogFormatError(lineno, str(e))

def check_sorted(records):
    """ timestamps strictly increasing """

    previous = None
    for i, record in enumerate(records):

        if previous is not None and record.timestamp_us <= previous:
            raise LogOrderError(f"record {i} at {record.timestamp_us} us does not follow {previous} us")

        previous = record.timestamp_us

def write_log(records, path):

    records = list(records)
    check_sorted(records)

    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(record_to_line(record) + "\n")

    logger.info("wrote %d records to %s", len(records), path)

def read_log(path):

    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):

            line = line.rstrip("\n")
            if not line.strip():
                raise LogFormatError(lineno, "empty line")

            records.append(record_from_line(line, lineno))

    check_sorted(records)
    logger.info("read %d records from %s", len(records), path)

    return records

def with_prediction(record, label):

    return replace(record, predicted_label=Label(label))
