"""Загрузка шаблонов jinja2 (промпты и отчеты)"""
from functools import lru_cache
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined, Template

from notestd.core.config import DATA_DIR


@lru_cache(maxsize=8)
def get_template_env(directory: Path = DATA_DIR) -> Environment:
    """Окружение без автоэкранирования: промпты и текстовые отчеты не HTML"""
    return Environment(
        loader=FileSystemLoader(str(directory)),
        undefined=StrictUndefined,
        autoescape=False,
        keep_trailing_newline=False,
    )


def load_template(path: Path) -> Template:
    """Шаблон по пути к файлу (каталог файла становится корнем загрузчика)"""
    path = Path(path).resolve()
    return get_template_env(path.parent).get_template(path.name)
