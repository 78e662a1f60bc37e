"""notestd - стандартизация клинических заметок, извлечение упоминаний и выгрузка в FHIR"""

__version__ = "1.0.1"
