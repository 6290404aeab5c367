# -*- encoding: UTF-8 -*-
"""流水线异常定义"""


class PipelineError(Exception):
    """流水线异常基类"""
    exit_code = 1

    def __str__(self):
        return self.__class__.__name__ + ': ' + ' '.join(str(a) for a in self.args)


class DomainError(PipelineError, ValueError):
    """参数超出定义域（维度不匹配、越界等）"""


class ModeError(DomainError):
    """模型模式不符（joint / translational）"""


class ParseError(PipelineError):
    """文件格式错误，offset 为出错的字节偏移"""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(PipelineError):
    """配置错误，line 为出错行号"""
    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingArtifactError(PipelineError):
    """前置产物缺失"""
    exit_code = 3

    def __init__(self, artifact, path=None):
        message = f"missing artifact '{artifact}'"
        if path is not None:
            message += f" at {path}"
        super().__init__(message)
        self.artifact = artifact
        self.path = path


class NumericError(PipelineError, ArithmeticError):
    """训练出现非有限数值"""
    exit_code = 4
