"""
Configuration module for cracbench
"""
from .settings import config, Config, FormatsConfig, AssemblyConfig, BenchSettings, LoggingConfig

__all__ = ['config', 'Config', 'FormatsConfig', 'AssemblyConfig', 'BenchSettings', 'LoggingConfig']
