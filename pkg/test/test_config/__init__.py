"""config 测试"""
