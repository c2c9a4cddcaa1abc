"""
Services package for the unitary-estimation toolkit
"""

from .verification_service import CheckResult, SuiteOptions, SuiteReport, VerificationService

__all__ = ['CheckResult', 'SuiteOptions', 'SuiteReport', 'VerificationService']
