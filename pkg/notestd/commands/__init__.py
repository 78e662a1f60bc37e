"""Команды CLI: по модулю на стадию пайплайна"""

__all__ = []
