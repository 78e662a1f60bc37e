"""Тесты пайплайна notestd"""
