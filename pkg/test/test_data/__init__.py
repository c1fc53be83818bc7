"""data 测试"""
