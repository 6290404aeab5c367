import os
from datetime import datetime
import sys
import logging


class LoggerManager:
    """日志管理器"""

    def __init__(self, base_dir=None, console_level=logging.INFO):
        self.base_dir = base_dir
        self.console_level = console_level
        self.date = datetime.now().strftime('%Y%m%d')

        # 无输出目录时只输出到控制台
        self.log_dir = None
        if base_dir:
            self.log_dir = os.path.join(base_dir, 'logs', self.date)
            os.makedirs(self.log_dir, exist_ok=True)

        self.setup_logging()

    def setup_logging(self):
        """设置日志系统"""
        root_logger = logging.getLogger()

        # 入口已配置过日志时，不带输出目录的实例沿用现有处理器
        if self.log_dir is None and root_logger.handlers:
            return
        root_logger.setLevel(logging.DEBUG)

        # 清除现有的处理器
        for handler in list(root_logger.handlers):
            root_logger.removeHandler(handler)
            handler.close()

        formatter = logging.Formatter(
            '%(asctime)s - %(levelname)s - %(message)s'
        )

        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(self.console_level)
        console_handler.setFormatter(formatter)
        console_handler.addFilter(self.filter_console_logs)
        root_logger.addHandler(console_handler)

        if self.log_dir is None:
            return

        # 主日志：INFO 及以上
        main_log_file = self.get_log_path("main.log")
        file_handler = logging.FileHandler(main_log_file, encoding='utf-8')
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

        # 调试日志：全部
        debug_log_file = self.get_log_path("debug.log")
        debug_handler = logging.FileHandler(debug_log_file, encoding='utf-8')
        debug_handler.setLevel(logging.DEBUG)
        debug_handler.setFormatter(formatter)
        root_logger.addHandler(debug_handler)

    def filter_console_logs(self, record):
        """过滤控制台日志：警告以上始终显示，逐批次的训练细节只进调试日志"""
        if record.levelno >= logging.WARNING:
            return True
        if record.levelno == logging.INFO:
            exclude_messages = ["batch", "debug"]
            message = str(record.msg).lower()
            return not any(msg in message for msg in exclude_messages)
        return False

    def get_logger(self, name, propagate=True):
        """获取指定模块的日志记录器"""
        logger = logging.getLogger(name)
        logger.propagate = propagate
        return logger

    def get_log_path(self, filename):
        """获取日志文件的完整路径"""
        if self.log_dir is None:
            return None
        return os.path.join(self.log_dir, filename)
