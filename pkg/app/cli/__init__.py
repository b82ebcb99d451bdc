"""Run documents, output writers and command implementations"""
