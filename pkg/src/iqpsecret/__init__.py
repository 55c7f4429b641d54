"""Generation and cryptanalysis of obfuscated IQP circuits over GF(2)."""

from .f2la import BitMatrix, BitVector, Subspace
from .scheme import IqpInstance, InstanceParams, SecretCertificate, generate_stabilizer, validate_secret
from .qrc import QrcParams, build_qrc_instance
from .attacks import AttackConfig, AttackReport

__all__ = [
    "BitMatrix", "BitVector", "Subspace", "IqpInstance", "InstanceParams", "SecretCertificate",
    "generate_stabilizer", "validate_secret", "QrcParams", "build_qrc_instance",
    "AttackConfig", "AttackReport",
]
__version__ = "0.1.0"
