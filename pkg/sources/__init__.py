"""
Source banks supplying speech, noise, music and room impulse responses.
"""

from .base_source import SourceBank, SourceKind
from .synthetic_source import SyntheticSourceBank
from .wav_directory_source import WavDirectorySource

__all__ = ['SourceBank', 'SourceKind', 'SyntheticSourceBank', 'WavDirectorySource']
